/** Generator checkpoint loading.
 *
 * The built-in variant's "checkpoint" is a JSON parameter file overriding
 * any subset of the generator defaults.  Anything unreadable, unparsable,
 * or out of range is a CheckpointLoadError.
 */

import { readFileSync } from 'fs';

import { CheckpointLoadError, InvalidConfigError } from './errors.js';
import { DEFAULT_GENERATOR_PARAMS, checkGeneratorParams, type GeneratorParams } from './types.js';

const KNOWN_KEYS = new Set(['levels', 'stability_delta', 'stride', 'max_masks']);

export function loadGeneratorParams(checkpointPath?: string): GeneratorParams {
  if (checkpointPath === undefined) {
    return { ...DEFAULT_GENERATOR_PARAMS, levels: [...DEFAULT_GENERATOR_PARAMS.levels] };
  }
  let doc: unknown;
  try {
    doc = JSON.parse(readFileSync(checkpointPath, 'utf-8'));
  } catch (err) {
    throw new CheckpointLoadError(`cannot load checkpoint ${checkpointPath}: ${err}`);
  }
  if (typeof doc !== 'object' || doc === null || Array.isArray(doc)) {
    throw new CheckpointLoadError(`checkpoint ${checkpointPath} must be a JSON object`);
  }
  const entries = doc as Record<string, unknown>;
  for (const key of Object.keys(entries)) {
    if (!KNOWN_KEYS.has(key)) {
      throw new CheckpointLoadError(
        `checkpoint ${checkpointPath} has unknown key '${key}'`);
    }
  }
  const params: GeneratorParams = {
    ...DEFAULT_GENERATOR_PARAMS,
    levels: [...DEFAULT_GENERATOR_PARAMS.levels],
  };
  if ('levels' in entries) {
    const levels = entries['levels'];
    if (!Array.isArray(levels) || levels.some((t) => typeof t !== 'number')) {
      throw new CheckpointLoadError('checkpoint levels must be a number array');
    }
    params.levels = levels as number[];
  }
  for (const [key, field] of [
    ['stability_delta', 'stabilityDelta'],
    ['stride', 'stride'],
    ['max_masks', 'maxMasks'],
  ] as const) {
    if (key in entries) {
      const value = entries[key];
      if (typeof value !== 'number') {
        throw new CheckpointLoadError(`checkpoint ${key} must be a number`);
      }
      params[field] = value;
    }
  }
  try {
    return checkGeneratorParams(params);
  } catch (err) {
    if (err instanceof InvalidConfigError) {
      throw new CheckpointLoadError(`checkpoint ${checkpointPath}: ${err.message}`);
    }
    throw err;
  }
}
