/** Export orchestration: image in, engine-readable case directory out.
 *
 * 2D inputs produce full-resolution masks; 3D inputs are segmented slice by
 * slice along the configured axis, each mask carrying its source_slice so
 * the engine can reassemble volumes.  Features are encoded at a strided
 * grid and stored channel-major.
 */

import { FloatValue } from './canonicalJson.js';
import { loadGeneratorParams } from './checkpoint.js';
import { FEATURE_CHANNELS, encodeSlice, encodeVolume } from './encoder.js';
import { InvalidConfigError, UnknownModelVariantError } from './errors.js';
import { proposeMasks } from './masks.js';
import { writeCase, type CaseContent, type MaskEntry } from './caseWriter.js';
import { resolveConfig, type ExportConfig, type GeneratorParams, type GridImage } from './types.js';

export interface ExportResult {
  caseDir: string;
  /** Case dims, after any slice-axis permutation. */
  dims: number[];
  maskCount: number;
  featureDims: number[];
}

/** Move `axis` to the front, keeping the other axes in order. */
export function permuteToSliceFirst(image: GridImage, axis: number,
                                    spacing: number[]): { image: GridImage; spacing: number[] } {
  if (image.dims.length !== 3 || axis === 0) {
    return { image, spacing };
  }
  const perm = [axis, ...[0, 1, 2].filter((a) => a !== axis)];
  const dims = perm.map((a) => image.dims[a]);
  const srcStrides = [image.dims[1] * image.dims[2], image.dims[2], 1];
  const data = new Float32Array(image.data.length);
  let out = 0;
  for (let a = 0; a < dims[0]; a++) {
    for (let b = 0; b < dims[1]; b++) {
      for (let c = 0; c < dims[2]; c++) {
        const coords = [a, b, c];
        let src = 0;
        for (let i = 0; i < 3; i++) src += coords[i] * srcStrides[perm[i]];
        data[out++] = image.data[src];
      }
    }
  }
  return { image: { data, dims }, spacing: perm.map((a) => spacing[a]) };
}

const GENERATORS: Record<string, (image: GridImage, params: GeneratorParams,
                                  cfg: ExportConfig) => MaskEntry[]> = {
  builtin: builtinGenerator,
};

function builtinGenerator(image: GridImage, params: GeneratorParams,
                          cfg: ExportConfig): MaskEntry[] {
  const masks: MaskEntry[] = [];
  if (image.dims.length === 2) {
    for (const m of proposeMasks(image.data, image.dims, params,
                                 cfg.predIouThresh, cfg.stabilityScoreThresh)) {
      masks.push({ bits: m.bits, predictedIou: m.predictedIou,
                   stabilityScore: m.stabilityScore, sourceSlice: null });
    }
    return masks;
  }
  const [depth, height, width] = image.dims;
  const sliceLen = height * width;
  for (let z = 0; z < depth; z++) {
    const slice = image.data.subarray(z * sliceLen, (z + 1) * sliceLen);
    for (const m of proposeMasks(slice, [height, width], params,
                                 cfg.predIouThresh, cfg.stabilityScoreThresh)) {
      masks.push({ bits: m.bits, predictedIou: m.predictedIou,
                   stabilityScore: m.stabilityScore, sourceSlice: z });
    }
  }
  return masks;
}

/** Run the configured generator and encoder and write the case directory. */
export function exportCase(input: GridImage,
                           config: Partial<ExportConfig> & Pick<ExportConfig, 'outputDir' | 'role'>): ExportResult {
  const cfg = resolveConfig(config);
  const generate = GENERATORS[cfg.modelVariant];
  if (generate === undefined) {
    throw new UnknownModelVariantError(
      `unknown model variant '${cfg.modelVariant}'; available: ${Object.keys(GENERATORS).join(', ')}`);
  }
  const params = loadGeneratorParams(cfg.checkpointPath);
  const spacingIn = cfg.spacing ?? input.dims.map(() => 1.0);
  if (spacingIn.length !== input.dims.length) {
    throw new InvalidConfigError(
      `spacing has ${spacingIn.length} entries for a rank-${input.dims.length} image`);
  }
  const { image, spacing } = permuteToSliceFirst(input, cfg.sliceAxis, spacingIn);

  const masks = generate(image, params, cfg);
  const features = image.dims.length === 2
    ? encodeSlice(image.data, image.dims, params.stride)
    : encodeVolume(image.data, image.dims, params.stride);

  const content: CaseContent = {
    role: cfg.role,
    imageData: image.data,
    dims: image.dims,
    spacing,
    featureData: features.data,
    featureDims: features.gridDims,
    featureChannels: FEATURE_CHANNELS,
    masks,
    extras: {
      export: {
        model_variant: cfg.modelVariant,
        pred_iou_thresh: new FloatValue(cfg.predIouThresh),
        stability_score_thresh: new FloatValue(cfg.stabilityScoreThresh),
        slice_axis: cfg.sliceAxis,
      },
    },
  };
  writeCase(cfg.outputDir, content);
  return {
    caseDir: cfg.outputDir,
    dims: image.dims,
    maskCount: masks.length,
    featureDims: features.gridDims,
  };
}
