/** Canonical JSON writer matching the engine's manifest serialization:
 * keys sorted, two-space indent, trailing newline added by the caller.
 *
 * JSON numbers carry no int/float distinction, but the reference writer
 * formats floats with a decimal point even when integral (1.0, not 1).
 * Values that are floats by schema are wrapped in FloatValue so this writer
 * can reproduce that byte-for-byte.
 */

export class FloatValue {
  constructor(readonly value: number) {
    if (!Number.isFinite(value)) {
      throw new RangeError(`JSON floats must be finite, got ${value}`);
    }
  }
}

export type JsonValue =
  | null
  | boolean
  | number
  | string
  | FloatValue
  | JsonValue[]
  | { [key: string]: JsonValue };

function formatFloat(v: number): string {
  // Integral floats keep a ".0"; everything else uses the shortest
  // round-trip decimal, which both sides' formatters produce.
  return Number.isInteger(v) ? v.toFixed(1) : String(v);
}

function render(value: JsonValue, indent: string): string {
  if (value === null) return 'null';
  if (value instanceof FloatValue) return formatFloat(value.value);
  switch (typeof value) {
    case 'boolean':
      return value ? 'true' : 'false';
    case 'number':
      if (!Number.isInteger(value)) {
        throw new RangeError(
          `bare number ${value} is not an integer; wrap floats in FloatValue`);
      }
      return String(value);
    case 'string':
      return JSON.stringify(value);
  }
  const inner = indent + '  ';
  if (Array.isArray(value)) {
    if (value.length === 0) return '[]';
    const items = value.map((v) => inner + render(v, inner));
    return '[\n' + items.join(',\n') + '\n' + indent + ']';
  }
  const keys = Object.keys(value).sort();
  if (keys.length === 0) return '{}';
  const items = keys.map(
    (k) => inner + JSON.stringify(k) + ': ' + render(value[k], inner));
  return '{\n' + items.join(',\n') + '\n' + indent + '}';
}

/** Serialize to the canonical form (no trailing newline). */
export function canonicalJson(value: JsonValue): string {
  return render(value, '');
}
