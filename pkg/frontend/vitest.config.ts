import { defineConfig } from 'vitest/config';

export default defineConfig({
  test: {
    include: ['tests/**/*.test.ts'],
    // the round-trip suite boots the python review service
    testTimeout: 60_000,
    hookTimeout: 60_000,
  },
});
