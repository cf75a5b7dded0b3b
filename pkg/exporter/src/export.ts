// Export run: feed every tensor-dump image in a directory through the
// checkpoint's conv stack, dump the selected post-activation feature maps,
// the thresholded output mask, and optional ground truth, then write a
// version-1 manifest the analysis side loads as-is.
import { existsSync, mkdirSync, readdirSync, rmdirSync, unlinkSync, writeFileSync } from 'node:fs';
import { basename, join, resolve } from 'node:path';
import { ConvStack, Image, loadCheckpoint } from './model.js';
import { readTensor, Tensor, writeTensor } from './npy.js';

export type LayerSelection = 'all' | 'last-two' | number[];

export interface ExportConfig {
  /** checkpoint JSON path */
  checkpoint: string;
  inputDir: string;
  outputDir: string;
  layers: LayerSelection;
  device: string;
  seed: number;
}

export class ConfigError extends Error {}

export class ExportError extends Error {}

/** Resolve a selection to strictly increasing 1-based layer indices. */
export function resolveSelection(sel: LayerSelection, layerCount: number): number[] {
  if (sel === 'all') return Array.from({ length: layerCount }, (_, i) => i + 1);
  if (sel === 'last-two') {
    if (layerCount < 2) throw new ConfigError('last-two selection needs at least 2 layers');
    return [layerCount - 1, layerCount];
  }
  if (sel.length === 0) throw new ConfigError('layer selection must not be empty');
  for (let i = 0; i < sel.length; i++) {
    const k = sel[i];
    if (!Number.isInteger(k) || k < 1 || k > layerCount) {
      throw new ConfigError(`layer index ${k} out of range 1..${layerCount}`);
    }
    if (i > 0 && sel[i - 1] >= k) {
      throw new ConfigError('explicit layer list must be strictly increasing');
    }
  }
  return [...sel];
}

function validateConfig(config: ExportConfig): void {
  if (!existsSync(config.inputDir)) {
    throw new ConfigError(`input directory ${config.inputDir} does not exist`);
  }
  if (resolve(config.inputDir) === resolve(config.outputDir)) {
    throw new ConfigError('output directory must be distinct from the input directory');
  }
  if (config.device !== 'cpu') {
    throw new ConfigError(`device ${JSON.stringify(config.device)} not supported; use 'cpu'`);
  }
  if (!Number.isInteger(config.seed) || config.seed < 0) {
    throw new ConfigError('seed must be a non-negative integer');
  }
}

function asImage(t: Tensor, name: string): Image {
  if (t.shape.length !== 2 && t.shape.length !== 3) {
    throw new ExportError(`${name}: expected a 2-D or 3-D tensor, got ${t.shape.length}-D`);
  }
  const [height, width] = t.shape;
  const channels = t.shape.length === 3 ? t.shape[2] : 1;
  const values = new Float32Array(height * width * channels);
  if (t.dtype === 'uint8') {
    for (let i = 0; i < values.length; i++) values[i] = t.data[i] / 255;
  } else {
    values.set(t.data as Float32Array);
  }
  return { height, width, channels, values };
}

function listImageIds(inputDir: string): string[] {
  const ids = readdirSync(inputDir)
    .filter((f) => f.endsWith('.npy') && !f.endsWith('.gt.npy'))
    .map((f) => f.slice(0, -'.npy'.length))
    .sort();
  if (ids.length === 0) {
    throw new ExportError(`no .npy images found in ${inputDir}`);
  }
  return ids;
}

interface ManifestLayer {
  layer_index: number;
  channels: number;
  feature: string;
}

interface ManifestImage {
  id: string;
  input: string;
  output: string;
  ground_truth?: string;
  layers: ManifestLayer[];
}

/** Run the export; returns the manifest path. Partial output is removed on failure. */
export function exportModelFeatures(config: ExportConfig): string {
  validateConfig(config);
  const ckpt = loadCheckpoint(config.checkpoint);
  const selection = resolveSelection(config.layers, ckpt.layers.length);
  const ids = listImageIds(config.inputDir);

  const createdFiles: string[] = [];
  const createdDirs: string[] = [];
  const mkdir = (dir: string) => {
    if (!existsSync(dir)) {
      mkdirSync(dir, { recursive: true });
      createdDirs.push(dir);
    }
  };
  const emit = (path: string, t: Tensor) => {
    writeTensor(path, t);
    createdFiles.push(path);
  };

  try {
    mkdir(config.outputDir);
    let model: ConvStack | null = null;
    let modelChannels = 0;
    const images: ManifestImage[] = [];

    for (const id of ids) {
      let tensor: Tensor;
      try {
        tensor = readTensor(join(config.inputDir, `${id}.npy`));
      } catch (err) {
        throw new ExportError(`image ${id}: ${(err as Error).message}`);
      }
      const image = asImage(tensor, id);
      if (model === null) {
        model = new ConvStack(ckpt, image.channels);
        modelChannels = image.channels;
      } else if (image.channels !== modelChannels) {
        throw new ExportError(
          `image ${id} has ${image.channels} channels, previous images have ${modelChannels}`,
        );
      }

      const { features, output } = model.forward(image);
      const imageDir = join(config.outputDir, id);
      mkdir(imageDir);

      emit(join(imageDir, 'input.npy'), {
        dtype: 'float32',
        shape: [image.height, image.width, image.channels],
        data: image.values,
      });
      const mask = new Uint8Array(output.length);
      for (let i = 0; i < output.length; i++) mask[i] = output[i] >= 0.5 ? 1 : 0;
      emit(join(imageDir, 'output.npy'), {
        dtype: 'uint8',
        shape: [image.height, image.width],
        data: mask,
      });

      const entry: ManifestImage = {
        id,
        input: `${id}/input.npy`,
        output: `${id}/output.npy`,
        layers: [],
      };
      const gtPath = join(config.inputDir, `${id}.gt.npy`);
      if (existsSync(gtPath)) {
        let gt: Tensor;
        try {
          gt = readTensor(gtPath);
        } catch (err) {
          throw new ExportError(`ground truth for ${id}: ${(err as Error).message}`);
        }
        if (gt.dtype !== 'uint8') {
          throw new ExportError(`ground truth for ${id} must be a uint8 dump`);
        }
        emit(join(imageDir, 'gt.npy'), gt);
        entry.ground_truth = `${id}/gt.npy`;
      }

      for (const k of selection) {
        const feat = features[k - 1];
        emit(join(imageDir, `layer${k}.npy`), {
          dtype: 'float32',
          shape: [feat.height, feat.width, feat.channels],
          data: feat.values,
        });
        entry.layers.push({
          layer_index: k,
          channels: feat.channels,
          feature: `${id}/layer${k}.npy`,
        });
      }
      images.push(entry);
    }

    const manifest = {
      version: 1,
      global_seed: config.seed,
      metadata: {
        checkpoint: basename(config.checkpoint),
        hook_points:
          'post-activation (ReLU) outputs of each 3x3 conv layer; the 1x1 sigmoid head is not hooked',
      },
      images,
    };
    const manifestPath = join(config.outputDir, 'manifest.json');
    writeFileSync(manifestPath, JSON.stringify(manifest, null, 2) + '\n');
    createdFiles.push(manifestPath);
    return manifestPath;
  } catch (err) {
    for (const f of createdFiles.reverse()) {
      try {
        unlinkSync(f);
      } catch {
        // cleanup is best-effort
      }
    }
    for (const d of createdDirs.reverse()) {
      try {
        rmdirSync(d);
      } catch {
        // leave non-empty directories alone
      }
    }
    throw err;
  }
}
