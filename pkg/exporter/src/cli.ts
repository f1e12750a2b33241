#!/usr/bin/env node
/** Command-line entry point: export one image to a case directory. */

import { realpathSync } from 'fs';
import { pathToFileURL } from 'url';

import yargs from 'yargs';
import { hideBin } from 'yargs/helpers';

import { ExportError, InvalidConfigError, UnknownModelVariantError } from './errors.js';
import { exportCase } from './exportCase.js';
import { readImageFile } from './imageio.js';
import { DEFAULT_PRED_IOU_THRESH, DEFAULT_STABILITY_SCORE_THRESH, type CaseRole } from './types.js';

function parseNumberList(text: string, flag: string): number[] {
  const values = text.split(',').map((s) => Number(s.trim()));
  if (values.length === 0 || values.some((v) => !Number.isFinite(v))) {
    throw new InvalidConfigError(`--${flag} expects comma-separated numbers, got '${text}'`);
  }
  return values;
}

interface CliArgs {
  input: string;
  out: string;
  role: CaseRole;
  dims?: string;
  spacing?: string;
  'model-variant': string;
  checkpoint?: string;
  'pred-iou-thresh': number;
  'stability-score-thresh': number;
  'slice-axis': number;
}

export function runCli(argv: string[]): number {
  const parser = yargs(argv)
    .scriptName('roireg-export')
    .usage('$0 <input> [options]', 'segment an image and write an engine case directory',
      (y) => y
        .positional('input', {
          describe: 'image file (.pgm, or .raw float32 with --dims)',
          type: 'string', demandOption: true,
        })
        .option('out', { type: 'string', demandOption: true, describe: 'case directory to write' })
        .option('role', {
          type: 'string', choices: ['moving', 'fixed'] as const,
          demandOption: true, describe: 'which side of the registration this case is',
        })
        .option('dims', { type: 'string', describe: 'grid dims for .raw input, e.g. 64,64 or 12,64,64' })
        .option('spacing', { type: 'string', describe: 'voxel spacing per axis, e.g. 1.0,0.8' })
        .option('model-variant', { type: 'string', default: 'builtin' })
        .option('checkpoint', { type: 'string', describe: 'generator parameter file (JSON)' })
        .option('pred-iou-thresh', { type: 'number', default: DEFAULT_PRED_IOU_THRESH })
        .option('stability-score-thresh', { type: 'number', default: DEFAULT_STABILITY_SCORE_THRESH })
        .option('slice-axis', { type: 'number', default: 0, describe: '3D only: axis to slice along' }))
    .strict()
    .fail((msg, err) => { throw err ?? new InvalidConfigError(msg); })
    .exitProcess(false);

  try {
    const args = parser.parseSync() as unknown as CliArgs;
    const dims = args.dims === undefined ? undefined : parseNumberList(args.dims, 'dims');
    const spacing = args.spacing === undefined ? undefined : parseNumberList(args.spacing, 'spacing');
    const image = readImageFile(args.input, dims);
    const result = exportCase(image, {
      outputDir: args.out,
      role: args.role,
      modelVariant: args['model-variant'],
      checkpointPath: args.checkpoint,
      predIouThresh: args['pred-iou-thresh'],
      stabilityScoreThresh: args['stability-score-thresh'],
      sliceAxis: args['slice-axis'],
      spacing,
    });
    console.log(`export: ${result.maskCount} masks, features ${result.featureDims.join('x')} -> ${result.caseDir}`);
    return 0;
  } catch (err) {
    if (err instanceof InvalidConfigError || err instanceof UnknownModelVariantError) {
      console.error(`usage error: ${err.message}`);
      return 2;
    }
    if (err instanceof ExportError) {
      console.error(`error: ${err.name}: ${err.message}`);
      return 1;
    }
    throw err;
  }
}

function isMainModule(): boolean {
  if (process.argv[1] === undefined) return false;
  try {
    return import.meta.url === pathToFileURL(realpathSync(process.argv[1])).href;
  } catch {
    return false;
  }
}

if (isMainModule()) {
  process.exit(runCli(hideBin(process.argv)));
}
