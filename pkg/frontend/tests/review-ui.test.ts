/**
 * Drives the UI against a real review service: a corpus is generated by
 * the pipeline CLI with review disabled (everything stays pending), the
 * service is spawned as a child process, and the tests press keys.
 */

import { afterAll, beforeAll, expect, test } from 'vitest';
import { ChildProcess, spawn, spawnSync } from 'node:child_process';
import { mkdtempSync, rmSync, writeFileSync } from 'node:fs';
import { get } from 'node:http';
import { tmpdir } from 'node:os';
import { join } from 'node:path';

import { App, createApp } from '../src/app.js';
import { TriageClient, TriageStats } from '../src/api.js';

const PORT = 8473;
const BASE = `http://127.0.0.1:${PORT}`;
const TOKEN = 'ui-test-token';

const STUDY = `
[pipeline]
seed = 4242
out_dir = "out"

[review]
mode = "none"
token = "${TOKEN}"

[corpus]
manual_per_label = 1
synthetic_per_label = 1

[corpus.synthetic_counts]
stucco = 40
siding = 40
null = 40
`;

let workdir: string;
let service: ChildProcess | null = null;

async function statsJson(): Promise<TriageStats> {
    const res = await fetch(`${BASE}/api/stats`);
    expect(res.ok).toBe(true);
    return await res.json();
}

function reviewedTotal(stats: TriageStats): number {
    return stats.overall.accepted + stats.overall.rejected;
}

function key(k: string): void {
    document.dispatchEvent(new KeyboardEvent('keydown', { key: k, bubbles: true }));
}

function newApp(token: string): App {
    const root = document.createElement('div');
    document.body.appendChild(root);
    return createApp(root, new TriageClient(BASE, token), 'ui-tester');
}

function currentImage(app: App): { id: string; label: string } {
    const img = app.root.querySelector('#current-image')!;
    return {
        id: img.getAttribute('data-image-id')!,
        label: img.getAttribute('data-label')!,
    };
}

beforeAll(async () => {
    workdir = mkdtempSync(join(tmpdir(), 'review-ui-'));
    writeFileSync(join(workdir, 'study.toml'), STUDY);
    const generated = spawnSync('python3',
                                ['-m', 'cadastre', 'generate', '--config', 'study.toml'],
                                { cwd: workdir, encoding: 'utf-8' });
    expect(generated.status, generated.stderr).toBe(0);
    service = spawn('python3',
                    ['-m', 'cadastre', 'serve', '--config', 'study.toml',
                     '--port', String(PORT)],
                    { cwd: workdir, stdio: 'ignore' });
    const ping = (): Promise<boolean> => new Promise((resolve) => {
        const req = get(`${BASE}/api/stats`, (res) => {
            res.resume();
            resolve(res.statusCode === 200);
        });
        req.on('error', () => resolve(false));
    });
    let ready = false;
    for (let i = 0; i < 240 && !ready; i++) {
        ready = await ping();
        if (!ready) {
            await new Promise((r) => setTimeout(r, 250));
        }
    }
    expect(ready, 'review service did not come up').toBe(true);
});

afterAll(() => {
    if (service !== null) {
        service.kill('SIGTERM');
    }
    rmSync(workdir, { recursive: true, force: true });
});

test('a scripted 50-review session matches the service stats', async () => {
    const app = newApp(TOKEN);
    await app.idle();

    const ledger = new Map<string, { accepted: number; rejected: number }>();
    for (let k = 0; k < 50; k++) {
        const shown = currentImage(app);
        const verdict = k % 3 === 0 ? 'rejected' : 'accepted';
        const tally = ledger.get(shown.label) ?? { accepted: 0, rejected: 0 };
        tally[verdict] += 1;
        ledger.set(shown.label, tally);
        key(verdict === 'accepted' ? 'a' : 'r');
        await app.idle();
    }

    const stats = await statsJson();
    expect(reviewedTotal(stats)).toBe(50);
    for (const [label, tally] of ledger) {
        expect(stats.per_label[label].accepted, label).toBe(tally.accepted);
        expect(stats.per_label[label].rejected, label).toBe(tally.rejected);
    }

    // The on-screen panel shows exactly what a follow-up GET reports.
    for (const row of app.root.querySelectorAll('.label-row')) {
        const label = row.getAttribute('data-label')!;
        const counts = row.querySelector('.label-counts')!;
        expect(counts.getAttribute('data-accepted'))
            .toBe(String(stats.per_label[label].accepted));
        expect(counts.getAttribute('data-rejected'))
            .toBe(String(stats.per_label[label].rejected));
        expect(counts.getAttribute('data-pending'))
            .toBe(String(stats.per_label[label].pending));
    }
    app.dispose();
});

test('skip shows a different image without posting a decision', async () => {
    const app = newApp(TOKEN);
    await app.idle();
    const before = await statsJson();
    const first = currentImage(app);
    key('s');
    await app.idle();
    expect(currentImage(app).id).not.toBe(first.id);
    const after = await statsJson();
    expect(reviewedTotal(after)).toBe(reviewedTotal(before));
    app.dispose();
});

test('a conflicting verdict renders the 409 state and moves on', async () => {
    const app = newApp(TOKEN);
    await app.idle();
    const shown = currentImage(app);
    const before = await statsJson();

    // Another reviewer gets there first with the opposite verdict.
    const res = await fetch(`${BASE}/api/review`, {
        method: 'POST',
        headers: { 'Content-Type': 'application/json', 'X-Triage-Token': TOKEN },
        body: JSON.stringify({
            image_id: shown.id, verdict: 'accepted', reviewer: 'other',
        }),
    });
    expect(res.ok).toBe(true);

    key('r');
    await app.idle();

    const banner = app.root.querySelector('.banner')!;
    expect(banner.className).toContain('conflict');
    expect(banner.textContent).toContain('already reviewed');
    expect(currentImage(app).id).not.toBe(shown.id);

    const after = await statsJson();
    expect(after.per_label[shown.label].accepted)
        .toBe(before.per_label[shown.label].accepted + 1);
    expect(after.per_label[shown.label].rejected)
        .toBe(before.per_label[shown.label].rejected);
    app.dispose();
});

test('a 401 prompts for the token and then completes the decision', async () => {
    const app = newApp('wrong-token');
    await app.idle();
    const before = await statsJson();
    key('a');
    await app.idle();

    const overlay = app.root.querySelector('.token-overlay')!;
    expect(overlay.className).toBe('token-overlay');

    const input = app.root.querySelector('.token-input') as HTMLInputElement;
    input.value = TOKEN;
    key('Enter');
    await app.idle();

    expect(overlay.className).toBe('token-overlay hidden');
    const after = await statsJson();
    expect(after.overall.accepted).toBe(before.overall.accepted + 1);
    app.dispose();
});

test('prompt dashboard sorts by batting average and promote follows the service',
     async () => {
    const app = newApp(TOKEN);
    await app.idle();

    const averages = Array.from(app.root.querySelectorAll('.prompt-row .avg'))
        .map((td) => {
            const raw = td.getAttribute('data-avg');
            return raw === '' ? -1 : Number(raw);
        });
    expect(averages.length).toBeGreaterThan(0);
    for (let i = 1; i < averages.length; i++) {
        expect(averages[i]).toBeLessThanOrEqual(averages[i - 1]);
    }

    const headers = Array.from(app.root.querySelectorAll('.prompt-table th'));
    const genHeader = headers.find((th) => th.textContent === 'gen')!;
    (genHeader as HTMLElement).click();
    const generated = Array.from(app.root.querySelectorAll('.prompt-row'))
        .map((tr) => Number(tr.children[3].textContent));
    for (let i = 1; i < generated.length; i++) {
        expect(generated[i]).toBeLessThanOrEqual(generated[i - 1]);
    }

    (app.root.querySelector('.min-samples') as HTMLInputElement).value = '1';
    (app.root.querySelector('.threshold') as HTMLInputElement).value = '0.5';
    (app.root.querySelector('.promote') as HTMLElement).click();
    await app.idle();

    const promptsRes = await fetch(`${BASE}/api/prompts`);
    const serverRows: Array<{ id: string; promoted: boolean }> =
        (await promptsRes.json()).prompts;
    const promotedOnServer = serverRows.filter((p) => p.promoted)
        .map((p) => p.id).sort();
    expect(promotedOnServer.length).toBeGreaterThan(0);
    const badged = Array.from(app.root.querySelectorAll('.prompt-row.promoted'))
        .map((tr) => tr.getAttribute('data-prompt-id')!).sort();
    expect(badged).toEqual(promotedOnServer);
    expect(app.root.querySelector('.prompt-status')!.textContent)
        .toBe(`promoted ${promotedOnServer.length} prompts`);
    app.dispose();
});

test('a transient network failure retries without double counting', async () => {
    const app = newApp(TOKEN);
    await app.idle();
    const before = await statsJson();
    const shown = currentImage(app);

    const realFetch = globalThis.fetch;
    let dropped = false;
    globalThis.fetch = ((input: any, init?: any) => {
        if (!dropped && String(input).includes('/api/review')) {
            dropped = true;
            return Promise.reject(new TypeError('network down'));
        }
        return realFetch(input, init);
    }) as typeof fetch;
    try {
        key('a');
        await app.idle();
    } finally {
        globalThis.fetch = realFetch;
    }

    expect(dropped).toBe(true);
    const after = await statsJson();
    expect(after.overall.accepted).toBe(before.overall.accepted + 1);
    expect(currentImage(app).id).not.toBe(shown.id);
    expect(app.root.querySelector('.banner')!.className).toContain('hidden');
    app.dispose();
});
