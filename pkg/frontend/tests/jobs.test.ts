import { describe, expect, it } from 'vitest';
import type { GatewayClient, JobStatus, JobView } from '../src/api.js';
import { JobFailed, JobTimeout, pollJob } from '../src/jobs.js';
import { recorded } from './helpers.js';

function jobWithStatus(status: JobStatus, errorMessage: string | null = null): JobView {
  const base = recorded<JobView>('job_queued.json');
  return { ...base, status, error_message: errorMessage };
}

/** GatewayClient stand-in that replays a scripted status sequence. */
function scriptedClient(sequence: JobView[]): GatewayClient {
  let i = 0;
  return {
    getJob: () => Promise.resolve(sequence[Math.min(i++, sequence.length - 1)]),
  } as unknown as GatewayClient;
}

describe('pollJob', () => {
  it('resolves once the job reports done', async () => {
    const done = recorded<JobView>('job_done.json');
    const client = scriptedClient([jobWithStatus('queued'), jobWithStatus('running'), done]);
    const delays: number[] = [];
    const job = await pollJob(client, done.job_id, {
      sleep: (ms) => {
        delays.push(ms);
        return Promise.resolve();
      },
    });
    expect(job.status).toBe('done');
    expect((job.result as { mean_btt: number }).mean_btt).toBeCloseTo(83.898476932, 6);
    expect(delays).toEqual([250, 500]);
  });

  it('doubles the delay up to the 2 s cap', async () => {
    const sequence = [
      ...Array.from({ length: 6 }, () => jobWithStatus('running')),
      recorded<JobView>('job_done.json'),
    ];
    const delays: number[] = [];
    await pollJob(scriptedClient(sequence), 'job', {
      sleep: (ms) => {
        delays.push(ms);
        return Promise.resolve();
      },
    });
    expect(delays).toEqual([250, 500, 1000, 2000, 2000, 2000]);
  });

  it('throws JobFailed with the server error message', async () => {
    const client = scriptedClient([
      jobWithStatus('running'),
      jobWithStatus('failed', 'simulation blew up'),
    ]);
    const err = await pollJob(client, 'job', { sleep: () => Promise.resolve() }).catch(
      (e: unknown) => e,
    );
    expect(err).toBeInstanceOf(JobFailed);
    expect((err as JobFailed).message).toBe('simulation blew up');
  });

  it('gives up after maxAttempts polls', async () => {
    const client = scriptedClient([jobWithStatus('running')]);
    const err = await pollJob(client, 'job', {
      maxAttempts: 3,
      sleep: () => Promise.resolve(),
    }).catch((e: unknown) => e);
    expect(err).toBeInstanceOf(JobTimeout);
  });
});
