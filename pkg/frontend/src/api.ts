import type { PolicyInfo, SessionSnapshot, WorldSnapshot } from './types.js';

/** Thin wrappers over the gateway REST endpoints; no state is kept here. */

export class ApiError extends Error {
  constructor(
    readonly status: number,
    message: string,
  ) {
    super(message);
  }
}

async function check(response: Response): Promise<Response> {
  if (!response.ok) {
    let detail = response.statusText;
    try {
      const body = await response.json();
      if (body && typeof body.detail === 'string') {
        detail = body.detail;
      }
    } catch {
      // non-JSON error body; keep statusText
    }
    throw new ApiError(response.status, detail);
  }
  return response;
}

export class GatewayApi {
  constructor(readonly baseUrl: string = '') {}

  private url(path: string): string {
    return this.baseUrl + path;
  }

  async submitCommand(text: string): Promise<string> {
    const response = await check(
      await fetch(this.url('/api/command'), {
        method: 'POST',
        headers: { 'Content-Type': 'application/json' },
        body: JSON.stringify({ text }),
      }),
    );
    const body = await response.json();
    return body.id as string;
  }

  async approve(commandId: string): Promise<void> {
    await check(await fetch(this.url(`/api/commands/${commandId}/approve`), { method: 'POST' }));
  }

  async reject(commandId: string): Promise<void> {
    await check(await fetch(this.url(`/api/commands/${commandId}/reject`), { method: 'POST' }));
  }

  async stop(): Promise<void> {
    await check(await fetch(this.url('/api/stop'), { method: 'POST' }));
  }

  async session(): Promise<SessionSnapshot> {
    return (await check(await fetch(this.url('/api/session')))).json();
  }

  async world(): Promise<WorldSnapshot> {
    return (await check(await fetch(this.url('/api/world')))).json();
  }

  async policies(): Promise<PolicyInfo[]> {
    return (await check(await fetch(this.url('/api/policies')))).json();
  }

  async policyText(name: string): Promise<string> {
    return (await check(await fetch(this.url(`/api/policies/${name}`)))).text();
  }

  async setPolicyEnabled(name: string, enabled: boolean): Promise<void> {
    await check(
      await fetch(this.url(`/api/policies/${name}/enabled`), {
        method: 'POST',
        headers: { 'Content-Type': 'application/json' },
        body: JSON.stringify({ enabled }),
      }),
    );
  }

  async deletePolicy(name: string): Promise<void> {
    await check(await fetch(this.url(`/api/policies/${name}`), { method: 'DELETE' }));
  }

  async startRecording(): Promise<void> {
    await check(await fetch(this.url('/api/recording/start'), { method: 'POST' }));
  }

  async saveRecording(name: string, hint: string): Promise<void> {
    await check(
      await fetch(this.url('/api/recording/save'), {
        method: 'POST',
        headers: { 'Content-Type': 'application/json' },
        body: JSON.stringify({ name, hint }),
      }),
    );
  }

  async discardRecording(): Promise<void> {
    await check(await fetch(this.url('/api/recording/discard'), { method: 'POST' }));
  }
}
