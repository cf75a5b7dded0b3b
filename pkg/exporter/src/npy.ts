// Tensor dump reader/writer: version 1.0 headers, little-endian payloads,
// float32 or uint8 only. The header is padded so the payload starts on a
// 64-byte boundary; readers on the Python side rely on that layout.
import { readFileSync, writeFileSync } from 'node:fs';

const MAGIC = Buffer.from('\x93NUMPY', 'latin1');
const HEADER_ALIGN = 64;

export type DumpDtype = 'float32' | 'uint8';

export interface Tensor {
  dtype: DumpDtype;
  shape: number[];
  data: Float32Array | Uint8Array;
}

export class DumpFormatError extends Error {}

function shapeRepr(shape: number[]): string {
  if (shape.length === 0) return '()';
  if (shape.length === 1) return `(${shape[0]},)`;
  return `(${shape.join(', ')})`;
}

function elementCount(shape: number[]): number {
  return shape.reduce((a, b) => a * b, 1);
}

export function encodeTensor(t: Tensor): Buffer {
  const count = elementCount(t.shape);
  if (t.data.length !== count) {
    throw new DumpFormatError(
      `shape ${shapeRepr(t.shape)} declares ${count} elements, data has ${t.data.length}`,
    );
  }
  const descr = t.dtype === 'float32' ? '<f4' : '|u1';
  const header = `{'descr': '${descr}', 'fortran_order': False, 'shape': ${shapeRepr(t.shape)}, }`;
  const base = MAGIC.length + 2 + 2;
  const pad = (HEADER_ALIGN - ((base + header.length + 1) % HEADER_ALIGN)) % HEADER_ALIGN;
  const headerBytes = Buffer.from(header + ' '.repeat(pad) + '\n', 'ascii');

  const itemSize = t.dtype === 'float32' ? 4 : 1;
  const payload = Buffer.alloc(count * itemSize);
  if (t.dtype === 'float32') {
    const view = new DataView(payload.buffer, payload.byteOffset, payload.byteLength);
    const data = t.data as Float32Array;
    for (let i = 0; i < count; i++) view.setFloat32(i * 4, data[i], true);
  } else {
    payload.set(t.data as Uint8Array);
  }

  const head = Buffer.alloc(base);
  MAGIC.copy(head, 0);
  head[6] = 1;
  head[7] = 0;
  head.writeUInt16LE(headerBytes.length, 8);
  return Buffer.concat([head, headerBytes, payload]);
}

export function writeTensor(path: string, t: Tensor): void {
  writeFileSync(path, encodeTensor(t));
}

export function decodeTensor(buf: Buffer): Tensor {
  if (buf.length < 10 || !buf.subarray(0, 6).equals(MAGIC)) {
    throw new DumpFormatError('bad magic (at byte 0)');
  }
  if (buf[6] !== 1 || buf[7] !== 0) {
    throw new DumpFormatError(`unsupported version ${buf[6]}.${buf[7]} (at byte 6)`);
  }
  const headerLen = buf.readUInt16LE(8);
  const headerEnd = 10 + headerLen;
  if (headerEnd > buf.length) {
    throw new DumpFormatError('declared header runs past end of file (at byte 8)');
  }
  const header = buf.subarray(10, headerEnd).toString('ascii');
  if (!header.endsWith('\n')) {
    throw new DumpFormatError('header is not newline-terminated (at byte 10)');
  }

  const descrMatch = /'descr':\s*'([^']*)'/.exec(header);
  const orderMatch = /'fortran_order':\s*(True|False)/.exec(header);
  const shapeMatch = /'shape':\s*\(([^)]*)\)/.exec(header);
  if (!descrMatch || !orderMatch || !shapeMatch) {
    throw new DumpFormatError('header missing descr/fortran_order/shape (at byte 10)');
  }
  if (orderMatch[1] !== 'False') {
    throw new DumpFormatError('fortran-order payloads are not supported');
  }
  const descr = descrMatch[1];
  if (descr !== '<f4' && descr !== '|u1') {
    throw new DumpFormatError(`unsupported descr ${descr}; only <f4 and |u1`);
  }
  const dims = shapeMatch[1].split(',').map((s) => s.trim()).filter((s) => s.length > 0);
  const shape = dims.map((s) => {
    if (!/^\d+$/.test(s)) throw new DumpFormatError(`bad dimension ${JSON.stringify(s)}`);
    return parseInt(s, 10);
  });

  const count = elementCount(shape);
  const itemSize = descr === '<f4' ? 4 : 1;
  const expected = count * itemSize;
  const payload = buf.subarray(headerEnd);
  if (payload.length < expected) {
    throw new DumpFormatError(`payload is ${payload.length} bytes, expected ${expected}`);
  }
  if (payload.length > expected) {
    throw new DumpFormatError(
      `trailing bytes after payload (at byte ${headerEnd + expected})`,
    );
  }

  if (descr === '|u1') {
    return { dtype: 'uint8', shape, data: Uint8Array.from(payload) };
  }
  const view = new DataView(buf.buffer, buf.byteOffset + headerEnd, expected);
  const data = new Float32Array(count);
  for (let i = 0; i < count; i++) data[i] = view.getFloat32(i * 4, true);
  return { dtype: 'float32', shape, data };
}

export function readTensor(path: string): Tensor {
  return decodeTensor(readFileSync(path));
}
