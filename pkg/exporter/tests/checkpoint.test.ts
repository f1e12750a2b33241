import { mkdtempSync, writeFileSync } from 'node:fs';
import { tmpdir } from 'node:os';
import { join } from 'node:path';

import { describe, expect, it } from 'vitest';

import { CheckpointLoadError, DEFAULT_GENERATOR_PARAMS, loadGeneratorParams } from '../dist/index.js';

function checkpointFile(content: string): string {
  const dir = mkdtempSync(join(tmpdir(), 'ckpt-'));
  const path = join(dir, 'params.json');
  writeFileSync(path, content);
  return path;
}

describe('loadGeneratorParams', () => {
  it('returns a private copy of the defaults when no path is given', () => {
    const params = loadGeneratorParams(undefined);
    expect(params).toEqual(DEFAULT_GENERATOR_PARAMS);
    params.levels.push(0.95);
    params.stride = 2;
    expect(loadGeneratorParams(undefined)).toEqual(DEFAULT_GENERATOR_PARAMS);
  });

  it('applies overrides from a parameter file and keeps the rest', () => {
    const path = checkpointFile(JSON.stringify({ stride: 8, max_masks: 16 }));
    const params = loadGeneratorParams(path);
    expect(params.stride).toBe(8);
    expect(params.maxMasks).toBe(16);
    expect(params.levels).toEqual(DEFAULT_GENERATOR_PARAMS.levels);
    expect(params.stabilityDelta).toBe(DEFAULT_GENERATOR_PARAMS.stabilityDelta);
  });

  it('accepts a full parameter file', () => {
    const path = checkpointFile(JSON.stringify({
      levels: [0.25, 0.5, 0.75],
      stability_delta: 0.1,
      stride: 2,
      max_masks: 64,
    }));
    const params = loadGeneratorParams(path);
    expect(params.levels).toEqual([0.25, 0.5, 0.75]);
    expect(params.stabilityDelta).toBe(0.1);
    expect(params.stride).toBe(2);
    expect(params.maxMasks).toBe(64);
  });

  it('rejects a missing file', () => {
    expect(() => loadGeneratorParams('/nonexistent/params.json')).toThrow(CheckpointLoadError);
  });

  it('rejects malformed JSON', () => {
    const path = checkpointFile('{ not json');
    expect(() => loadGeneratorParams(path)).toThrow(CheckpointLoadError);
  });

  it('rejects non-object documents', () => {
    expect(() => loadGeneratorParams(checkpointFile('[1, 2]'))).toThrow(CheckpointLoadError);
    expect(() => loadGeneratorParams(checkpointFile('42'))).toThrow(CheckpointLoadError);
    expect(() => loadGeneratorParams(checkpointFile('null'))).toThrow(CheckpointLoadError);
  });

  it('rejects unknown keys by name', () => {
    const path = checkpointFile(JSON.stringify({ stride: 4, window: 9 }));
    expect(() => loadGeneratorParams(path)).toThrow(/window/);
    expect(() => loadGeneratorParams(path)).toThrow(CheckpointLoadError);
  });

  it('rejects values of the wrong type', () => {
    expect(() => loadGeneratorParams(checkpointFile(JSON.stringify({ stride: 'four' }))))
      .toThrow(CheckpointLoadError);
    expect(() => loadGeneratorParams(checkpointFile(JSON.stringify({ levels: 0.5 }))))
      .toThrow(CheckpointLoadError);
    expect(() => loadGeneratorParams(checkpointFile(JSON.stringify({ levels: [0.5, 'x'] }))))
      .toThrow(CheckpointLoadError);
  });

  it('rejects parameter values outside their valid ranges', () => {
    expect(() => loadGeneratorParams(checkpointFile(JSON.stringify({ stride: 0 }))))
      .toThrow(CheckpointLoadError);
    expect(() => loadGeneratorParams(checkpointFile(JSON.stringify({ stride: 2.5 }))))
      .toThrow(CheckpointLoadError);
    expect(() => loadGeneratorParams(checkpointFile(JSON.stringify({ levels: [0.9, 0.1] }))))
      .toThrow(CheckpointLoadError);
    expect(() => loadGeneratorParams(checkpointFile(JSON.stringify({ levels: [0, 0.5] }))))
      .toThrow(CheckpointLoadError);
    expect(() => loadGeneratorParams(checkpointFile(JSON.stringify({ stability_delta: 0.5 }))))
      .toThrow(CheckpointLoadError);
    expect(() => loadGeneratorParams(checkpointFile(JSON.stringify({ max_masks: -1 }))))
      .toThrow(CheckpointLoadError);
  });
});
