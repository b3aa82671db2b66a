// Transports bridge the browser (or tests) to the server's line protocol.

export interface Transport {
  send(line: string): void;
  onLine(handler: (line: string) => void): void;
  onClose(handler: () => void): void;
  close(): void;
}

/**
 * Browser transport speaking to bridge.mjs: upstream lines go out as POST
 * /send, downstream lines arrive over a server-sent-events stream at /events.
 */
export class HttpTransport implements Transport {
  private lineHandler: ((line: string) => void) | null = null;
  private closeHandler: (() => void) | null = null;
  private source: EventSource;

  constructor(private base: string = "") {
    this.source = new EventSource(this.base + "/events");
    this.source.onmessage = (ev) => {
      if (this.lineHandler) this.lineHandler(ev.data as string);
    };
    this.source.onerror = () => {
      if (this.closeHandler) this.closeHandler();
    };
  }

  send(line: string): void {
    void fetch(this.base + "/send", { method: "POST", body: line });
  }

  onLine(handler: (line: string) => void): void {
    this.lineHandler = handler;
  }

  onClose(handler: () => void): void {
    this.closeHandler = handler;
  }

  close(): void {
    this.source.close();
  }
}
