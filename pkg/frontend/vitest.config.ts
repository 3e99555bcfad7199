import { defineConfig } from 'vitest/config';

// The review service under test listens on a fixed port so the happy-dom
// origin matches it (same-origin keeps fetch simple).
export default defineConfig({
    test: {
        environment: 'happy-dom',
        environmentOptions: {
            happyDOM: { url: 'http://127.0.0.1:8473' },
        },
        testTimeout: 120000,
        hookTimeout: 300000,
        fileParallelism: false,
    },
});
