#!/usr/bin/env node
// Command-line wrapper: exit 0 on success, 1 for config problems, 2 for
// data or model problems.
import { pathToFileURL } from 'node:url';
import yargs from 'yargs';
import { hideBin } from 'yargs/helpers';
import { CheckpointError } from './model.js';
import { ConfigError, exportModelFeatures, LayerSelection } from './export.js';

export function parseLayerSelection(text: string): LayerSelection {
  if (text === 'all' || text === 'last-two') return text;
  const parts = text.split(',').map((s) => s.trim());
  if (parts.some((s) => !/^\d+$/.test(s))) {
    throw new ConfigError(
      `--layers must be 'all', 'last-two', or comma-separated indices; got ${JSON.stringify(text)}`,
    );
  }
  return parts.map((s) => parseInt(s, 10));
}

export function main(argv: string[]): number {
  const args = yargs(argv)
    .scriptName('protoseg-export')
    .usage('$0 --checkpoint ckpt.json --input dir --out dir [options]')
    .option('checkpoint', { type: 'string', demandOption: true, describe: 'model checkpoint JSON' })
    .option('input', { type: 'string', demandOption: true, describe: 'directory of .npy images' })
    .option('out', { type: 'string', demandOption: true, describe: 'output directory' })
    .option('layers', {
      type: 'string',
      default: 'all',
      describe: "hooked layers: 'all', 'last-two', or e.g. '1,3,5'",
    })
    .option('device', { type: 'string', default: 'cpu' })
    .option('seed', { type: 'number', default: 0 })
    .strict()
    .exitProcess(false)
    .fail((msg, err) => {
      throw err ?? new ConfigError(msg);
    })
    .help(false);

  if (argv.includes('--help') || argv.includes('-h')) {
    args.showHelp('log');
    return 0;
  }

  try {
    const parsed = args.parseSync();
    const manifestPath = exportModelFeatures({
      checkpoint: parsed.checkpoint,
      inputDir: parsed.input,
      outputDir: parsed.out,
      layers: parseLayerSelection(parsed.layers),
      device: parsed.device,
      seed: parsed.seed,
    });
    console.log(manifestPath);
    return 0;
  } catch (err) {
    if (err instanceof ConfigError || err instanceof CheckpointError) {
      console.error(`protoseg-export: ${(err as Error).message}`);
      return 1;
    }
    console.error(`protoseg-export: ${(err as Error).message}`);
    return 2;
  }
}

if (process.argv[1] && import.meta.url === pathToFileURL(process.argv[1]).href) {
  process.exit(main(hideBin(process.argv)));
}
