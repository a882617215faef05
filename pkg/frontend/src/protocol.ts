/**
 * Newline-delimited JSON protocol.
 *
 * hello:  {"op":"hello"}                      -> {"dim": d, "model": name}
 * embed:  {"id": n, "op":"embed", "png_b64"}  -> {"id": n, "embedding": [...]}
 * any failure on a request: {"id": n, "error": msg}; the session survives.
 */

import { decodePng } from './png';
import { Encoder } from './encoder';

export type Reply = Record<string, unknown>;

export function handleLine(line: string, encoder: Encoder): Reply | null {
  const trimmed = line.trim();
  if (trimmed === '') return null;
  let request: Record<string, unknown>;
  try {
    request = JSON.parse(trimmed);
  } catch {
    // not even JSON: no id to attribute the error to
    return { error: 'malformed request: not valid JSON' };
  }
  const id = request.id;
  const op = request.op;
  try {
    if (op === 'hello') {
      return { id, dim: encoder.dim, model: encoder.modelName };
    }
    if (op === 'embed') {
      const b64 = request.png_b64;
      if (typeof b64 !== 'string' || b64 === '') {
        return { id, error: 'embed request missing png_b64' };
      }
      const buffer = Buffer.from(b64, 'base64');
      if (buffer.length === 0) {
        return { id, error: 'png_b64 decodes to nothing' };
      }
      const image = decodePng(buffer);
      const embedding = encoder.embed(image);
      if (embedding.length !== encoder.dim || embedding.some((v) => !Number.isFinite(v))) {
        return { id, error: 'encoder produced an invalid embedding' };
      }
      return { id, embedding };
    }
    return { id, error: `unknown op ${String(op)}` };
  } catch (exc) {
    return { id, error: exc instanceof Error ? exc.message : String(exc) };
  }
}
