import { describe, expect, it } from 'vitest';

import { FloatValue, canonicalJson } from '../dist/index.js';

describe('canonicalJson', () => {
  it('sorts object keys and indents by two spaces', () => {
    const text = canonicalJson({ b: 1, a: 'x' });
    expect(text).toBe('{\n  "a": "x",\n  "b": 1\n}');
  });

  it('renders integral floats with a decimal point', () => {
    expect(canonicalJson(new FloatValue(1))).toBe('1.0');
    expect(canonicalJson(new FloatValue(-3))).toBe('-3.0');
  });

  it('renders fractional floats as their shortest decimal', () => {
    expect(canonicalJson(new FloatValue(0.9))).toBe('0.9');
    expect(canonicalJson(new FloatValue(0.9375))).toBe('0.9375');
  });

  it('renders null, booleans, integers, and empty containers', () => {
    expect(canonicalJson(null)).toBe('null');
    expect(canonicalJson(true)).toBe('true');
    expect(canonicalJson(42)).toBe('42');
    expect(canonicalJson([])).toBe('[]');
    expect(canonicalJson({})).toBe('{}');
  });

  it('nests arrays and objects like the reference serializer', () => {
    const text = canonicalJson({
      dims: [2, 3],
      meta: [{ score: new FloatValue(1), slice: null }],
    });
    expect(text).toBe([
      '{',
      '  "dims": [',
      '    2,',
      '    3',
      '  ],',
      '  "meta": [',
      '    {',
      '      "score": 1.0,',
      '      "slice": null',
      '    }',
      '  ]',
      '}',
    ].join('\n'));
  });

  it('rejects bare non-integer numbers: floats must be explicit', () => {
    expect(() => canonicalJson({ x: 0.5 })).toThrow(RangeError);
  });

  it('rejects non-finite floats', () => {
    expect(() => new FloatValue(Infinity)).toThrow(RangeError);
    expect(() => new FloatValue(NaN)).toThrow(RangeError);
  });
});
