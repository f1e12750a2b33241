/** Typed failures raised by the exporter. */

/** Base class so callers can catch everything the exporter throws on bad
 * input while letting programming errors propagate. */
export class ExportError extends Error {
  constructor(message: string) {
    super(message);
    this.name = new.target.name;
  }
}

/** The input image file is missing, truncated, or not a supported format. */
export class UnreadableImageError extends ExportError {}

/** The checkpoint (generator parameter file) is missing or invalid. */
export class CheckpointLoadError extends ExportError {}

/** The requested model variant has no registered generator. */
export class UnknownModelVariantError extends ExportError {}

/** An ExportConfig field is out of range or inconsistent. */
export class InvalidConfigError extends ExportError {}
