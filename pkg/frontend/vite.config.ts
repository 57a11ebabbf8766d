import { defineConfig } from "vitest/config";

export default defineConfig({
  build: {
    outDir: "dist",
    target: "es2020",
  },
  server: {
    // during development the Python service runs separately
    proxy: {
      "/stream": "http://127.0.0.1:8080",
      "/status": "http://127.0.0.1:8080",
      "/telemetry": "http://127.0.0.1:8080",
      "/mode": "http://127.0.0.1:8080",
      "/health": "http://127.0.0.1:8080",
    },
  },
  test: {
    environment: "node",
    testTimeout: 120000,
    hookTimeout: 60000,
    fileParallelism: false,
  },
});
