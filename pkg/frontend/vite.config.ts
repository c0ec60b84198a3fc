import { defineConfig } from "vitest/config";

export default defineConfig({
  build: { outDir: "dist" },
  server: { proxy: { "/api": "http://127.0.0.1:8000" } },
  test: { environment: "node", include: ["src/__tests__/**/*.test.ts"] },
});
