import { defineConfig } from "vitest/config";

export default defineConfig({
  test: {
    include: ["test/**/*.test.ts"],
    environment: "node",
    testTimeout: 30_000,
    hookTimeout: 90_000,
    // the e2e suite owns a real server process; keep files sequential
    fileParallelism: false,
  },
});
