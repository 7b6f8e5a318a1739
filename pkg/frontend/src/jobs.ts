// Job polling with exponential backoff.

import type { GatewayClient, JobView } from './api.js';

export class JobFailed extends Error {
  constructor(
    readonly jobId: string,
    message: string,
  ) {
    super(message);
    this.name = 'JobFailed';
  }
}

export class JobTimeout extends Error {
  constructor(jobId: string) {
    super(`job ${jobId} did not finish in time`);
    this.name = 'JobTimeout';
  }
}

export interface PollOptions {
  initialDelayMs?: number;
  maxDelayMs?: number;
  maxAttempts?: number;
  sleep?: (ms: number) => Promise<void>;
}

function defaultSleep(ms: number): Promise<void> {
  return new Promise((resolve) => setTimeout(resolve, ms));
}

/**
 * Poll a job until it is done, doubling the delay from 250 ms up to a
 * 2 s cap. Throws JobFailed with the server's error_message on failure.
 */
export async function pollJob(
  client: GatewayClient,
  jobId: string,
  options: PollOptions = {},
): Promise<JobView> {
  const maxDelay = options.maxDelayMs ?? 2000;
  const maxAttempts = options.maxAttempts ?? 300;
  const sleep = options.sleep ?? defaultSleep;
  let delay = options.initialDelayMs ?? 250;
  for (let attempt = 0; attempt < maxAttempts; attempt++) {
    const job = await client.getJob(jobId);
    if (job.status === 'done') return job;
    if (job.status === 'failed') {
      throw new JobFailed(jobId, job.error_message ?? 'job failed');
    }
    await sleep(delay);
    delay = Math.min(delay * 2, maxDelay);
  }
  throw new JobTimeout(jobId);
}
