/** Case-directory writer.
 *
 * Produces the exact on-disk format the engine reads: a canonical
 * manifest.json (sorted keys, two-space indent, trailing newline) alongside
 * row-major little-endian float32 arrays and one-byte-per-voxel masks.
 */

import { mkdirSync, writeFileSync } from 'fs';
import { join } from 'path';

import { FloatValue, canonicalJson, type JsonValue } from './canonicalJson.js';
import type { CaseRole } from './types.js';

export const FORMAT_VERSION = 1;

export interface MaskEntry {
  /** 0/1 bytes, row-major over the mask's own dims. */
  bits: Uint8Array;
  predictedIou: number | null;
  stabilityScore: number | null;
  /** Set for per-slice masks of a 3D case; null for full-grid masks. */
  sourceSlice: number | null;
}

export interface CaseContent {
  role: CaseRole;
  imageData: Float32Array;
  dims: number[];
  spacing: number[];
  featureData: Float32Array;
  featureDims: number[];
  featureChannels: number;
  masks: MaskEntry[];
  /** Extra top-level manifest keys (the engine ignores unknown keys). */
  extras?: Record<string, JsonValue>;
}

export function maskRef(index: number): string {
  return `mask_${String(index).padStart(3, '0')}.raw`;
}

/** The manifest as a JSON document, ready for canonical serialization. */
export function buildManifestDoc(content: CaseContent): Record<string, JsonValue> {
  const doc: Record<string, JsonValue> = {
    version: FORMAT_VERSION,
    role: content.role,
    image_ref: 'image.raw',
    feature_ref: 'features.raw',
    mask_refs: content.masks.map((_, i) => maskRef(i)),
    mask_meta: content.masks.map((m) => ({
      predicted_iou: m.predictedIou === null ? null : new FloatValue(m.predictedIou),
      stability_score: m.stabilityScore === null ? null : new FloatValue(m.stabilityScore),
      source_slice: m.sourceSlice,
    })),
    dims: content.dims,
    spacing: content.spacing.map((s) => new FloatValue(s)),
    feature_dims: content.featureDims,
    feature_channels: content.featureChannels,
  };
  return { ...doc, ...(content.extras ?? {}) };
}

export function manifestJson(content: CaseContent): string {
  return canonicalJson(buildManifestDoc(content)) + '\n';
}

/** Little-endian float32 bytes regardless of host endianness. */
export function float32Bytes(values: Float32Array): Buffer {
  const buf = Buffer.allocUnsafe(values.length * 4);
  for (let i = 0; i < values.length; i++) {
    buf.writeFloatLE(values[i], i * 4);
  }
  return buf;
}

function product(dims: number[]): number {
  return dims.reduce((a, b) => a * b, 1);
}

/** Write the full case directory; throws on internally inconsistent sizes
 * (those are programming errors in the caller, not input errors). */
export function writeCase(caseDir: string, content: CaseContent): void {
  if (content.imageData.length !== product(content.dims)) {
    throw new RangeError(
      `image has ${content.imageData.length} voxels, dims say ${product(content.dims)}`);
  }
  const featureLen = content.featureChannels * product(content.featureDims);
  if (content.featureData.length !== featureLen) {
    throw new RangeError(
      `features hold ${content.featureData.length} values, expected ${featureLen}`);
  }
  if (content.spacing.length !== content.dims.length
      || content.featureDims.length !== content.dims.length) {
    throw new RangeError('spacing/feature_dims rank must match dims');
  }
  const sliceLen = content.dims.length === 3
    ? content.dims[1] * content.dims[2] : product(content.dims);
  for (const [i, mask] of content.masks.entries()) {
    const expected = mask.sourceSlice !== null ? sliceLen : product(content.dims);
    if (mask.bits.length !== expected) {
      throw new RangeError(`mask ${i} has ${mask.bits.length} bytes, expected ${expected}`);
    }
  }

  mkdirSync(caseDir, { recursive: true });
  writeFileSync(join(caseDir, 'manifest.json'), manifestJson(content), 'utf-8');
  writeFileSync(join(caseDir, 'image.raw'), float32Bytes(content.imageData));
  writeFileSync(join(caseDir, 'features.raw'), float32Bytes(content.featureData));
  content.masks.forEach((mask, i) => {
    writeFileSync(join(caseDir, maskRef(i)), Buffer.from(mask.bits));
  });
}
