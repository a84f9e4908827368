/** Frame transport over a WebSocket-like object, plus a scripted test double. */

import { Frame } from "./types.js";

export interface Transport {
  send(data: string): void;
  onMessage(handler: (data: string) => void): void;
  onClose(handler: () => void): void;
  close(): void;
}

interface SocketLike {
  send(data: string): void;
  close(): void;
  // Node `ws` style and browser style; callback parameter kept loose so both
  // libraries' event types satisfy it.
  on?(event: string, cb: (...args: never[]) => void): void;
  addEventListener?(event: string, cb: (ev: any) => void): void;
}

/** Wraps either a browser WebSocket or the node `ws` client. */
export class WebSocketTransport implements Transport {
  constructor(private readonly sock: SocketLike) {}

  send(data: string): void {
    this.sock.send(data);
  }

  onMessage(handler: (data: string) => void): void {
    if (this.sock.on) {
      this.sock.on("message", (data: unknown) => handler(String(data)));
    } else if (this.sock.addEventListener) {
      this.sock.addEventListener("message", (ev) => handler(String(ev.data)));
    }
  }

  onClose(handler: () => void): void {
    if (this.sock.on) {
      this.sock.on("close", () => handler());
    } else if (this.sock.addEventListener) {
      this.sock.addEventListener("close", () => handler());
    }
  }

  close(): void {
    this.sock.close();
  }
}

/** Test double: records outgoing frames, scripts incoming ones. */
export class FakeTransport implements Transport {
  sent: Frame[] = [];
  closed = false;
  private messageHandlers: ((data: string) => void)[] = [];
  private closeHandlers: (() => void)[] = [];

  send(data: string): void {
    this.sent.push(JSON.parse(data) as Frame);
  }

  onMessage(handler: (data: string) => void): void {
    this.messageHandlers.push(handler);
  }

  onClose(handler: () => void): void {
    this.closeHandlers.push(handler);
  }

  close(): void {
    this.closed = true;
    for (const handler of this.closeHandlers) handler();
  }

  /** Simulate a server frame arriving. */
  emit(frame: Frame): void {
    for (const handler of this.messageHandlers) handler(JSON.stringify(frame));
  }
}

/** Stamps session_id and a per-connection monotone frame_seq on every send. */
export class FrameClient {
  private seq = 0;
  private handlers: ((frame: Frame) => void)[] = [];

  constructor(readonly transport: Transport, readonly sessionId: string) {
    transport.onMessage((data) => {
      let frame: Frame;
      try {
        frame = JSON.parse(data) as Frame;
      } catch {
        return;
      }
      for (const handler of this.handlers) handler(frame);
    });
  }

  onFrame(handler: (frame: Frame) => void): void {
    this.handlers.push(handler);
  }

  send(frameType: string, payload: Record<string, unknown>): void {
    this.seq += 1;
    this.transport.send(JSON.stringify({
      frame_type: frameType,
      session_id: this.sessionId,
      frame_seq: this.seq,
      payload,
    }));
  }

  hello(role: "student" | "instructor",
        extra: Record<string, unknown> = {}): void {
    this.send("hello", { role, ...extra });
  }
}
