/** Framing for the bugworld wire protocol: 4-byte big-endian header
 *  length, JSON header, raw payload of header.payload_len bytes. The same
 *  bodies travel inside binary WebSocket frames. */

export interface MessageHeader {
  [key: string]: unknown;
  payload_len?: number;
}

export interface Message {
  header: MessageHeader;
  payload: Uint8Array;
}

export class ProtocolError extends Error {}

function sortedStringify(obj: Record<string, unknown>): string {
  const keys = Object.keys(obj).sort();
  const parts = keys.map(
    (k) => `${JSON.stringify(k)}:${JSON.stringify(obj[k])}`,
  );
  return `{${parts.join(",")}}`;
}

export function encodeMessage(
  header: MessageHeader,
  payload: Uint8Array = new Uint8Array(0),
): Uint8Array {
  const withLen = { ...header, payload_len: payload.length };
  const raw = new TextEncoder().encode(sortedStringify(withLen));
  const out = new Uint8Array(4 + raw.length + payload.length);
  new DataView(out.buffer).setUint32(0, raw.length, false);
  out.set(raw, 4);
  out.set(payload, 4 + raw.length);
  return out;
}

export function decodeMessage(data: Uint8Array): Message {
  if (data.length < 4) {
    throw new ProtocolError("truncated length prefix");
  }
  const view = new DataView(data.buffer, data.byteOffset, data.byteLength);
  const headerLen = view.getUint32(0, false);
  if (data.length < 4 + headerLen) {
    throw new ProtocolError("truncated header");
  }
  let header: MessageHeader;
  try {
    header = JSON.parse(
      new TextDecoder().decode(data.subarray(4, 4 + headerLen)),
    );
  } catch (e) {
    throw new ProtocolError(`bad header: ${e}`);
  }
  if (header === null || typeof header !== "object" || Array.isArray(header)) {
    throw new ProtocolError("header must be a JSON object");
  }
  const payloadLen = Number(header.payload_len ?? 0);
  if (payloadLen < 0) {
    throw new ProtocolError("negative payload_len");
  }
  if (data.length < 4 + headerLen + payloadLen) {
    throw new ProtocolError("truncated payload");
  }
  const payload = data.subarray(4 + headerLen, 4 + headerLen + payloadLen);
  return { header, payload };
}

/** Split an obs payload into frame and mask pixel planes. */
export function splitObsPayload(
  payload: Uint8Array,
  width: number,
  height: number,
): { frame: Uint8Array; mask: Uint8Array } {
  const plane = width * height * 3;
  if (payload.length !== 2 * plane) {
    throw new ProtocolError(
      `obs payload must be ${2 * plane} bytes, got ${payload.length}`,
    );
  }
  return {
    frame: payload.subarray(0, plane),
    mask: payload.subarray(plane),
  };
}
