import { describe, expect, it } from "vitest";
import { MultipartParser } from "../src/multipart";

const enc = new TextEncoder();

function part(seq: number, body: string): Uint8Array {
  return enc.encode(
    `--frame\r\n` +
      `Content-Type: image/jpeg\r\n` +
      `Content-Length: ${body.length}\r\n` +
      `X-Seq: ${seq}\r\n` +
      `X-Capture-Ms: ${1000 + seq}\r\n` +
      `\r\n` +
      `${body}\r\n`,
  );
}

describe("MultipartParser", () => {
  it("parses a complete part", () => {
    const parser = new MultipartParser();
    const parts = parser.push(part(7, "JPEGDATA"));
    expect(parts).toHaveLength(1);
    expect(parts[0].headers["X-Seq"]).toBe("7");
    expect(parts[0].headers["Content-Type"]).toBe("image/jpeg");
    expect(new TextDecoder().decode(parts[0].body)).toBe("JPEGDATA");
  });

  it("reassembles parts split at every possible byte", () => {
    const bytes = part(1, "abc");
    for (let cut = 1; cut < bytes.length; cut++) {
      const parser = new MultipartParser();
      const first = parser.push(bytes.slice(0, cut));
      const second = parser.push(bytes.slice(cut));
      const parts = [...first, ...second];
      expect(parts).toHaveLength(1);
      expect(new TextDecoder().decode(parts[0].body)).toBe("abc");
    }
  });

  it("emits multiple parts from one chunk, in order", () => {
    const parser = new MultipartParser();
    const chunk = new Uint8Array([...part(1, "one"), ...part(2, "twotwo")]);
    const parts = parser.push(chunk);
    expect(parts.map((p) => p.headers["X-Seq"])).toEqual(["1", "2"]);
    expect(parts.map((p) => p.body.length)).toEqual([3, 6]);
  });

  it("handles binary bodies containing the boundary string", () => {
    const parser = new MultipartParser();
    const tricky = "xx--frame\r\nyy";
    const parts = parser.push(part(3, tricky));
    expect(parts).toHaveLength(1);
    expect(new TextDecoder().decode(parts[0].body)).toBe(tricky);
  });

  it("rejects a wrong boundary", () => {
    const parser = new MultipartParser();
    expect(() => parser.push(enc.encode("--other\r\n"))).toThrow(/boundary/);
  });

  it("rejects a part without Content-Length", () => {
    const parser = new MultipartParser();
    const bad = enc.encode("--frame\r\nContent-Type: image/jpeg\r\n\r\n");
    expect(() => parser.push(bad)).toThrow(/Content-Length/);
  });

  it("tolerates a blank line between parts", () => {
    const parser = new MultipartParser();
    const chunk = new Uint8Array([
      ...part(1, "a"),
      ...enc.encode("\r\n"),
      ...part(2, "b"),
    ]);
    expect(parser.push(chunk)).toHaveLength(2);
  });
});
