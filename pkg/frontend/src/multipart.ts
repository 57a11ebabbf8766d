// Incremental parser for the multipart/x-mixed-replace stream.
//
// Fed arbitrary chunk boundaries, emits complete parts. The grammar per
// part is fixed by the server:
//
//   --frame\r\n
//   Header: value\r\n ...
//   \r\n
//   <Content-Length bytes>\r\n

export interface StreamPart {
  headers: Record<string, string>;
  body: Uint8Array;
}

const CRLF = "\r\n";

function concat(a: Uint8Array, b: Uint8Array): Uint8Array {
  const out = new Uint8Array(a.length + b.length);
  out.set(a, 0);
  out.set(b, a.length);
  return out;
}

function indexOfCrlf(buf: Uint8Array, from: number): number {
  for (let i = from; i + 1 < buf.length; i++) {
    if (buf[i] === 13 && buf[i + 1] === 10) return i;
  }
  return -1;
}

export class MultipartParser {
  private buf: Uint8Array = new Uint8Array(0);
  private readonly boundaryLine: string;

  constructor(boundary = "frame") {
    this.boundaryLine = `--${boundary}`;
  }

  // Returns every part completed by this chunk (usually zero or one).
  push(chunk: Uint8Array): StreamPart[] {
    this.buf = concat(this.buf, chunk);
    const parts: StreamPart[] = [];
    for (;;) {
      const part = this.tryParseOne();
      if (!part) break;
      parts.push(part);
    }
    return parts;
  }

  private tryParseOne(): StreamPart | null {
    const decoder = new TextDecoder();
    let pos = 0;

    // boundary line, tolerating a stray blank line before it
    for (;;) {
      const eol = indexOfCrlf(this.buf, pos);
      if (eol < 0) return null;
      const line = decoder.decode(this.buf.subarray(pos, eol));
      pos = eol + 2;
      if (line === "") continue;
      if (line !== this.boundaryLine) {
        throw new Error(`expected boundary, got ${JSON.stringify(line)}`);
      }
      break;
    }

    const headers: Record<string, string> = {};
    for (;;) {
      const eol = indexOfCrlf(this.buf, pos);
      if (eol < 0) return null;
      const line = decoder.decode(this.buf.subarray(pos, eol));
      pos = eol + 2;
      if (line === "") break;
      const sep = line.indexOf(": ");
      if (sep < 0) throw new Error(`malformed header ${JSON.stringify(line)}`);
      headers[line.slice(0, sep)] = line.slice(sep + 2);
    }

    const length = Number(headers["Content-Length"]);
    if (!Number.isInteger(length) || length < 0) {
      throw new Error("missing or invalid Content-Length");
    }
    if (this.buf.length < pos + length + CRLF.length) return null;
    const body = this.buf.slice(pos, pos + length);
    const tail = decoder.decode(
      this.buf.subarray(pos + length, pos + length + 2),
    );
    if (tail !== CRLF) throw new Error("part body not CRLF-terminated");

    this.buf = this.buf.slice(pos + length + 2);
    return { headers, body };
  }
}
