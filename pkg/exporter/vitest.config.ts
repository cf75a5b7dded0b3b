import { defineConfig } from 'vitest/config';

export default defineConfig({
  test: {
    include: ['test/**/*.test.ts'],
    // the export round-trip test shells out to the analysis CLI
    testTimeout: 30000,
  },
});
