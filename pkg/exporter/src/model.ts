// Deterministic convolutional stack whose weights derive from a checkpoint
// seed: 3x3 same-padding conv + ReLU per layer, 1x1 sigmoid head. It exists
// to produce reproducible hooked tensors, not to be trained.
import { readFileSync } from 'node:fs';
import { z } from 'zod';
import { Rng } from './rng.js';

export const checkpointSchema = z.object({
  version: z.literal(1),
  seed: z.number().int().nonnegative(),
  // out-channels per conv layer, first to last
  layers: z.array(z.number().int().positive()).nonempty(),
});

export type Checkpoint = z.infer<typeof checkpointSchema>;

export class CheckpointError extends Error {}

export function loadCheckpoint(path: string): Checkpoint {
  let raw: string;
  try {
    raw = readFileSync(path, 'utf8');
  } catch (err) {
    throw new CheckpointError(`cannot read checkpoint ${path}: ${(err as Error).message}`);
  }
  let doc: unknown;
  try {
    doc = JSON.parse(raw);
  } catch (err) {
    throw new CheckpointError(`checkpoint ${path} is not valid JSON: ${(err as Error).message}`);
  }
  const parsed = checkpointSchema.safeParse(doc);
  if (!parsed.success) {
    throw new CheckpointError(`checkpoint ${path}: ${parsed.error.issues[0].message}`);
  }
  return parsed.data;
}

export interface Image {
  height: number;
  width: number;
  channels: number;
  /** row-major H x W x C */
  values: Float32Array;
}

export interface LayerOutput extends Image {
  /** 1-based position in the stack, matching f_1..f_n layer naming */
  layerIndex: number;
}

export interface ForwardResult {
  features: LayerOutput[];
  /** per-pixel object probability, H x W */
  output: Float32Array;
}

/** 3x3 convolution with zero padding; output keeps the spatial dims. */
export function conv3x3(
  src: Float32Array,
  h: number,
  w: number,
  inC: number,
  weights: Float32Array,
  bias: Float32Array,
  outC: number,
): Float32Array {
  const dst = new Float32Array(h * w * outC);
  for (let y = 0; y < h; y++) {
    for (let x = 0; x < w; x++) {
      for (let o = 0; o < outC; o++) {
        let acc = bias[o];
        for (let ky = 0; ky < 3; ky++) {
          const sy = y + ky - 1;
          if (sy < 0 || sy >= h) continue;
          for (let kx = 0; kx < 3; kx++) {
            const sx = x + kx - 1;
            if (sx < 0 || sx >= w) continue;
            const srcBase = (sy * w + sx) * inC;
            const wBase = ((o * inC) * 3 + ky) * 3 + kx;
            for (let ci = 0; ci < inC; ci++) {
              acc += src[srcBase + ci] * weights[wBase + ci * 9];
            }
          }
        }
        dst[(y * w + x) * outC + o] = acc;
      }
    }
  }
  return dst;
}

interface ConvLayer {
  inC: number;
  outC: number;
  weights: Float32Array;
  bias: Float32Array;
}

export class ConvStack {
  readonly layerCount: number;
  private readonly layers: ConvLayer[] = [];
  private readonly headWeights: Float32Array;
  private readonly headBias: number;

  constructor(ckpt: Checkpoint, inChannels: number) {
    if (inChannels < 1) throw new CheckpointError('input must have at least one channel');
    this.layerCount = ckpt.layers.length;
    const rng = new Rng(ckpt.seed);
    let inC = inChannels;
    for (const outC of ckpt.layers) {
      const limit = Math.sqrt(6 / (inC * 9 + outC * 9));
      const weights = new Float32Array(outC * inC * 9);
      for (let i = 0; i < weights.length; i++) weights[i] = rng.uniform(-limit, limit);
      const bias = new Float32Array(outC);
      for (let i = 0; i < outC; i++) bias[i] = rng.uniform(-0.1, 0.1);
      this.layers.push({ inC, outC, weights, bias });
      inC = outC;
    }
    const headLimit = Math.sqrt(6 / (inC + 1));
    this.headWeights = new Float32Array(inC);
    for (let i = 0; i < inC; i++) this.headWeights[i] = rng.uniform(-headLimit, headLimit);
    this.headBias = rng.uniform(-0.1, 0.1);
  }

  forward(input: Image): ForwardResult {
    const { height: h, width: w } = input;
    let current = input.values;
    let channels = input.channels;
    const features: LayerOutput[] = [];
    this.layers.forEach((layer, idx) => {
      if (channels !== layer.inC) {
        throw new CheckpointError(
          `layer ${idx + 1} expects ${layer.inC} channels, got ${channels}`,
        );
      }
      const out = conv3x3(current, h, w, layer.inC, layer.weights, layer.bias, layer.outC);
      for (let i = 0; i < out.length; i++) if (out[i] < 0) out[i] = 0;
      // hook point: post-activation output of this conv layer
      features.push({
        layerIndex: idx + 1,
        height: h,
        width: w,
        channels: layer.outC,
        values: out,
      });
      current = out;
      channels = layer.outC;
    });

    const output = new Float32Array(h * w);
    for (let p = 0; p < h * w; p++) {
      let logit = this.headBias;
      for (let c = 0; c < channels; c++) logit += this.headWeights[c] * current[p * channels + c];
      output[p] = 1 / (1 + Math.exp(-logit));
    }
    return { features, output };
  }
}
