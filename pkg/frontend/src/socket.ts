import type { GatewayEvent } from './types.js';

/**
 * Single WebSocket to the gateway with automatic reconnect. The server
 * replays recent events on every (re)connect; consumers dedupe by seq,
 * which `reduce` already does, so replays are harmless.
 */
export class EventSocket {
  private ws: WebSocket | null = null;
  private closed = false;
  private retryMs = 500;

  constructor(
    private readonly url: string,
    private readonly onEvent: (event: GatewayEvent) => void,
    private readonly onStatus: (connected: boolean) => void = () => {},
  ) {}

  connect(): void {
    if (this.closed) {
      return;
    }
    this.ws = new WebSocket(this.url);
    this.ws.onopen = () => {
      this.retryMs = 500;
      this.onStatus(true);
    };
    this.ws.onmessage = (message: MessageEvent) => {
      try {
        this.onEvent(JSON.parse(String(message.data)) as GatewayEvent);
      } catch {
        // malformed frame; ignore
      }
    };
    this.ws.onclose = () => {
      this.onStatus(false);
      if (!this.closed) {
        setTimeout(() => this.connect(), this.retryMs);
        this.retryMs = Math.min(this.retryMs * 2, 10_000);
      }
    };
    this.ws.onerror = () => {
      this.ws?.close();
    };
  }

  close(): void {
    this.closed = true;
    this.ws?.close();
  }
}
