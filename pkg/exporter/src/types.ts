/** Shared value types for the exporter. */

import { InvalidConfigError } from './errors.js';

/** A row-major float grid; dims are [y, x] in 2D or [z, y, x] in 3D. */
export interface GridImage {
  data: Float32Array;
  dims: number[];
}

/** One proposed region: a full-resolution binary mask plus quality scores. */
export interface MaskProposal {
  /** One byte per pixel, values 0/1, row-major over the slice dims. */
  bits: Uint8Array;
  /** In-plane dims of `bits` (the slice dims for per-slice 3D export). */
  dims: number[];
  area: number;
  predictedIou: number;
  stabilityScore: number;
}

/** Tunable parameters of the built-in proposal generator.  These are what a
 * checkpoint file overrides. */
export interface GeneratorParams {
  /** Normalized thresholds to scan, each in (0, 1), strictly increasing. */
  levels: number[];
  /** Threshold perturbation used for the stability score. */
  stabilityDelta: number;
  /** Feature grid downsampling stride in pixels per in-plane axis. */
  stride: number;
  /** Keep at most this many proposals per case, best quality first. */
  maxMasks: number;
}

export const DEFAULT_GENERATOR_PARAMS: GeneratorParams = {
  levels: [0.1, 0.2, 0.3, 0.4, 0.5, 0.6, 0.7, 0.8, 0.9],
  stabilityDelta: 0.05,
  stride: 4,
  maxMasks: 128,
};

export type CaseRole = 'moving' | 'fixed';

/** Full configuration of one export run. */
export interface ExportConfig {
  /** Optional parameter file for the generator; absent means defaults. */
  checkpointPath?: string;
  /** Which mask generator to run; only 'builtin' ships with this package. */
  modelVariant: string;
  /** Proposals below this predicted quality are dropped. */
  predIouThresh: number;
  /** Proposals less stable than this under threshold perturbation drop. */
  stabilityScoreThresh: number;
  /** For 3D inputs: which input axis to slice along (becomes case axis 0). */
  sliceAxis: number;
  outputDir: string;
  role: CaseRole;
  /** Voxel spacing per input axis; defaults to 1.0 everywhere. */
  spacing?: number[];
}

export const DEFAULT_PRED_IOU_THRESH = 0.9;
export const DEFAULT_STABILITY_SCORE_THRESH = 0.9;

/** Fill defaults and validate ranges; throws InvalidConfigError. */
export function resolveConfig(partial: Partial<ExportConfig> & Pick<ExportConfig, 'outputDir' | 'role'>): ExportConfig {
  const cfg: ExportConfig = {
    modelVariant: 'builtin',
    predIouThresh: DEFAULT_PRED_IOU_THRESH,
    stabilityScoreThresh: DEFAULT_STABILITY_SCORE_THRESH,
    sliceAxis: 0,
    ...partial,
  };
  for (const [name, value] of [
    ['predIouThresh', cfg.predIouThresh],
    ['stabilityScoreThresh', cfg.stabilityScoreThresh],
  ] as const) {
    if (!Number.isFinite(value) || value < 0 || value > 1) {
      throw new InvalidConfigError(`${name} must be in [0, 1], got ${value}`);
    }
  }
  if (!Number.isInteger(cfg.sliceAxis) || cfg.sliceAxis < 0 || cfg.sliceAxis > 2) {
    throw new InvalidConfigError(`sliceAxis must be 0, 1, or 2, got ${cfg.sliceAxis}`);
  }
  if (cfg.role !== 'moving' && cfg.role !== 'fixed') {
    throw new InvalidConfigError(`role must be 'moving' or 'fixed', got '${cfg.role}'`);
  }
  if (cfg.spacing !== undefined && cfg.spacing.some((s) => !Number.isFinite(s) || s <= 0)) {
    throw new InvalidConfigError(`spacing entries must be positive, got ${cfg.spacing}`);
  }
  return cfg;
}

/** Validate generator parameters (defaults or a loaded checkpoint). */
export function checkGeneratorParams(params: GeneratorParams): GeneratorParams {
  const { levels, stabilityDelta, stride, maxMasks } = params;
  if (levels.length === 0 || levels.some((t) => !(t > 0 && t < 1))) {
    throw new InvalidConfigError(`levels must lie in (0, 1), got ${levels}`);
  }
  for (let i = 1; i < levels.length; i++) {
    if (levels[i] <= levels[i - 1]) {
      throw new InvalidConfigError('levels must be strictly increasing');
    }
  }
  if (!(stabilityDelta > 0 && stabilityDelta < 0.5)) {
    throw new InvalidConfigError(`stabilityDelta must be in (0, 0.5), got ${stabilityDelta}`);
  }
  if (!Number.isInteger(stride) || stride < 1) {
    throw new InvalidConfigError(`stride must be a positive integer, got ${stride}`);
  }
  if (!Number.isInteger(maxMasks) || maxMasks < 1) {
    throw new InvalidConfigError(`maxMasks must be a positive integer, got ${maxMasks}`);
  }
  return params;
}
