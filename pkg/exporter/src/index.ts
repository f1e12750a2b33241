/** Public API of the exporter. */

export { FloatValue, canonicalJson, type JsonValue } from './canonicalJson.js';
export {
  FORMAT_VERSION, buildManifestDoc, manifestJson, maskRef, float32Bytes,
  writeCase, type CaseContent, type MaskEntry,
} from './caseWriter.js';
export { loadGeneratorParams } from './checkpoint.js';
export { FEATURE_CHANNELS, encodeSlice, encodeVolume, type EncodedSlice } from './encoder.js';
export {
  CheckpointLoadError, ExportError, InvalidConfigError, UnknownModelVariantError,
  UnreadableImageError,
} from './errors.js';
export { exportCase, permuteToSliceFirst, type ExportResult } from './exportCase.js';
export { checkDims, readImageFile, readPgm, readRawImage } from './imageio.js';
export { labelComponents, normalizeSlice, proposeMasks } from './masks.js';
export { runCli } from './cli.js';
export {
  DEFAULT_GENERATOR_PARAMS, DEFAULT_PRED_IOU_THRESH, DEFAULT_STABILITY_SCORE_THRESH,
  checkGeneratorParams, resolveConfig,
  type CaseRole, type ExportConfig, type GeneratorParams, type GridImage, type MaskProposal,
} from './types.js';
