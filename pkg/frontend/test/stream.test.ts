import http from "node:http";
import { AddressInfo } from "node:net";
import { afterEach, describe, expect, it } from "vitest";
import { StreamClient } from "../src/stream";
import { StreamPart } from "../src/multipart";

// a server that streams `perConnection` parts and then drops the socket
function flakyServer(perConnection: number) {
  let seq = 0;
  let connections = 0;
  const server = http.createServer((req, res) => {
    if (req.url !== "/stream") {
      res.writeHead(404).end();
      return;
    }
    connections++;
    res.writeHead(200, {
      "Content-Type": "multipart/x-mixed-replace; boundary=frame",
    });
    for (let i = 0; i < perConnection; i++) {
      const body = `frame-${seq}`;
      res.write(
        `--frame\r\nContent-Type: image/jpeg\r\nContent-Length: ${body.length}\r\n` +
          `X-Seq: ${seq}\r\nX-Capture-Ms: ${Date.now()}\r\n\r\n${body}\r\n`,
      );
      seq++;
    }
    setTimeout(() => res.destroy(), 30);
  });
  return {
    server,
    start: () =>
      new Promise<string>((resolve) => {
        server.listen(0, "127.0.0.1", () => {
          const { port } = server.address() as AddressInfo;
          resolve(`http://127.0.0.1:${port}`);
        });
      }),
    connectionCount: () => connections,
  };
}

let cleanup: (() => void) | null = null;
afterEach(() => cleanup?.());

describe("StreamClient", () => {
  it("reconnects after a drop and keeps X-Seq monotonic", async () => {
    const flaky = flakyServer(3);
    const url = await flaky.start();

    const parts: StreamPart[] = [];
    const drops: string[] = [];
    let connects = 0;
    const client = new StreamClient(url, {
      onPart: (p) => parts.push(p),
      onConnect: () => connects++,
      onDrop: (reason) => drops.push(reason),
    });
    cleanup = () => {
      client.stop();
      flaky.server.close();
    };

    client.start();
    await waitFor(() => parts.length >= 8, 8000);
    client.stop();

    expect(connects).toBeGreaterThanOrEqual(2);
    expect(drops.length).toBeGreaterThanOrEqual(1);
    expect(flaky.connectionCount()).toBeGreaterThanOrEqual(2);
    const seqs = parts.map((p) => Number(p.headers["X-Seq"]));
    for (let i = 1; i < seqs.length; i++) {
      expect(seqs[i]).toBeGreaterThan(seqs[i - 1]);
    }
  });

  it("reports an unreachable server through onDrop", async () => {
    const drops: string[] = [];
    const client = new StreamClient("http://127.0.0.1:9", {
      onPart: () => {},
      onDrop: (reason) => drops.push(reason),
    });
    cleanup = () => client.stop();
    client.start();
    await waitFor(() => drops.length >= 1, 8000);
    expect(drops[0]).toBeTruthy();
  });
});

function waitFor(cond: () => boolean, timeoutMs: number): Promise<void> {
  const t0 = Date.now();
  return new Promise((resolve, reject) => {
    const poll = setInterval(() => {
      if (cond()) {
        clearInterval(poll);
        resolve();
      } else if (Date.now() - t0 > timeoutMs) {
        clearInterval(poll);
        reject(new Error("condition not met in time"));
      }
    }, 10);
  });
}
