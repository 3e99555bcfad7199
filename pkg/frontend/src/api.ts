/**
 * Typed client for the triage review service.
 *
 * Reads are open; every mutation carries the shared token in the
 * X-Triage-Token header. Network-level failures are retried a couple of
 * times before giving up: the service treats a repeated identical verdict
 * as a no-op, so a retried decision can never double-count.
 */

export interface QueueRecord {
    id: string;
    label: string;
    provenance: string;
    path: string;
    width: number;
    height: number;
    prompt_id: string | null;
    city: string | null;
    status: string;
}

export interface BucketStats {
    generated: number;
    accepted: number;
    rejected: number;
    pending: number;
    irrelevance_rate: number | null;
}

export interface PromptTally {
    material: string;
    generated: number;
    accepted: number;
    rejected: number;
    batting_average: number | null;
    promoted: boolean;
}

export interface TriageStats {
    per_label: Record<string, BucketStats>;
    overall: BucketStats;
    per_prompt: Record<string, PromptTally>;
}

export interface PromptRow {
    id: string;
    material: string;
    text: string;
    generated: number;
    accepted: number;
    rejected: number;
    batting_average: number | null;
    promoted: boolean;
}

export type Verdict = 'accepted' | 'rejected';

export type ReviewOutcome =
    | { kind: 'ok'; stats: TriageStats }
    | { kind: 'conflict'; detail: string }
    | { kind: 'unauthorized' }
    | { kind: 'failed'; detail: string };

export type PromoteOutcome =
    | { kind: 'ok'; promoted: string[]; prompts: PromptRow[] }
    | { kind: 'unauthorized' }
    | { kind: 'failed'; detail: string };

const RETRY_DELAYS_MS = [250, 1000];

function sleep(ms: number): Promise<void> {
    return new Promise((resolve) => setTimeout(resolve, ms));
}

async function errorDetail(res: Response): Promise<string> {
    try {
        const body = await res.json();
        if (body && typeof body.detail === 'string') {
            return body.detail;
        }
    } catch {
        // fall through to the status line
    }
    return `HTTP ${res.status}`;
}

export class TriageClient {
    constructor(readonly baseUrl: string, public token: string) {}

    private async request(path: string, init?: RequestInit): Promise<Response> {
        let lastError: unknown;
        for (let attempt = 0; attempt <= RETRY_DELAYS_MS.length; attempt++) {
            try {
                return await fetch(this.baseUrl + path, init);
            } catch (err) {
                lastError = err;
                if (attempt < RETRY_DELAYS_MS.length) {
                    await sleep(RETRY_DELAYS_MS[attempt]);
                }
            }
        }
        throw lastError;
    }

    async nextPending(label?: string): Promise<QueueRecord | null> {
        const query = label ? `?label=${encodeURIComponent(label)}` : '';
        const res = await this.request(`/api/queue/next${query}`);
        if (res.status === 204) {
            return null;
        }
        if (!res.ok) {
            throw new Error(`queue/next: ${await errorDetail(res)}`);
        }
        return await res.json();
    }

    imageUrl(id: string): string {
        return `${this.baseUrl}/api/image/${encodeURIComponent(id)}`;
    }

    async submitReview(imageId: string, verdict: Verdict,
                       reviewer: string): Promise<ReviewOutcome> {
        let res: Response;
        try {
            res = await this.request('/api/review', {
                method: 'POST',
                headers: {
                    'Content-Type': 'application/json',
                    'X-Triage-Token': this.token,
                },
                body: JSON.stringify({ image_id: imageId, verdict, reviewer }),
            });
        } catch (err) {
            return { kind: 'failed', detail: String(err) };
        }
        if (res.status === 401) {
            return { kind: 'unauthorized' };
        }
        if (res.status === 409) {
            return { kind: 'conflict', detail: await errorDetail(res) };
        }
        if (!res.ok) {
            return { kind: 'failed', detail: await errorDetail(res) };
        }
        return { kind: 'ok', stats: await res.json() };
    }

    async stats(): Promise<TriageStats> {
        const res = await this.request('/api/stats');
        if (!res.ok) {
            throw new Error(`stats: ${await errorDetail(res)}`);
        }
        return await res.json();
    }

    async prompts(): Promise<PromptRow[]> {
        const res = await this.request('/api/prompts');
        if (!res.ok) {
            throw new Error(`prompts: ${await errorDetail(res)}`);
        }
        const body = await res.json();
        return body.prompts;
    }

    async promote(minSamples: number, threshold: number): Promise<PromoteOutcome> {
        let res: Response;
        try {
            res = await this.request('/api/prompts/promote', {
                method: 'POST',
                headers: {
                    'Content-Type': 'application/json',
                    'X-Triage-Token': this.token,
                },
                body: JSON.stringify({ min_samples: minSamples, threshold }),
            });
        } catch (err) {
            return { kind: 'failed', detail: String(err) };
        }
        if (res.status === 401) {
            return { kind: 'unauthorized' };
        }
        if (!res.ok) {
            return { kind: 'failed', detail: await errorDetail(res) };
        }
        const body = await res.json();
        return { kind: 'ok', promoted: body.promoted, prompts: body.prompts };
    }
}
