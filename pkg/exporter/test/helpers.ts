import { mkdtempSync, writeFileSync } from 'node:fs';
import { tmpdir } from 'node:os';
import { join } from 'node:path';
import { writeTensor } from '../src/npy.js';

export function tempDir(prefix: string): string {
  return mkdtempSync(join(tmpdir(), prefix));
}

export function writeCheckpoint(dir: string, seed = 0, layers: number[] = [4, 6, 8]): string {
  const path = join(dir, 'ckpt.json');
  writeFileSync(path, JSON.stringify({ version: 1, seed, layers }) + '\n');
  return path;
}

/** 20x20 float image: zeros with a 9x9 bright square centered at (cx, cy). */
export function squareImage(cx: number, cy: number): Float32Array {
  const values = new Float32Array(20 * 20);
  for (let y = 0; y < 20; y++) {
    for (let x = 0; x < 20; x++) {
      if (Math.abs(x - cx) < 5 && Math.abs(y - cy) < 5) values[y * 20 + x] = 3.0;
    }
  }
  return values;
}

export function squareMask(cx: number, cy: number): Uint8Array {
  const img = squareImage(cx, cy);
  const mask = new Uint8Array(img.length);
  for (let i = 0; i < img.length; i++) mask[i] = img[i] > 0 ? 1 : 0;
  return mask;
}

/** Input dir with two images (a, b) and a ground-truth mask for each. */
export function writeInputs(dir: string, withGt = true): void {
  writeTensor(join(dir, 'a.npy'), { dtype: 'float32', shape: [20, 20], data: squareImage(8, 8) });
  writeTensor(join(dir, 'b.npy'), { dtype: 'float32', shape: [20, 20], data: squareImage(13, 11) });
  if (withGt) {
    writeTensor(join(dir, 'a.gt.npy'), { dtype: 'uint8', shape: [20, 20], data: squareMask(8, 8) });
    writeTensor(join(dir, 'b.gt.npy'), { dtype: 'uint8', shape: [20, 20], data: squareMask(13, 11) });
  }
}
