// Node-side transport: a raw TCP line socket. Used by the headless tests and
// by the bridge; never imported from browser code.

import * as net from "node:net";

import type { Transport } from "./transport.js";

export class TcpTransport implements Transport {
  private socket: net.Socket;
  private buffer = "";
  private lineHandler: ((line: string) => void) | null = null;
  private closeHandler: (() => void) | null = null;

  constructor(host: string, port: number, onConnect?: () => void) {
    this.socket = net.createConnection({ host, port }, onConnect);
    this.socket.setEncoding("utf-8");
    this.socket.on("data", (chunk: string) => {
      this.buffer += chunk;
      let index = this.buffer.indexOf("\n");
      while (index >= 0) {
        const line = this.buffer.slice(0, index);
        this.buffer = this.buffer.slice(index + 1);
        if (line.trim() && this.lineHandler) this.lineHandler(line);
        index = this.buffer.indexOf("\n");
      }
    });
    this.socket.on("close", () => {
      if (this.closeHandler) this.closeHandler();
    });
    this.socket.on("error", () => {
      /* surfaced via close */
    });
  }

  send(line: string): void {
    this.socket.write(line + "\n");
  }

  onLine(handler: (line: string) => void): void {
    this.lineHandler = handler;
  }

  onClose(handler: () => void): void {
    this.closeHandler = handler;
  }

  close(): void {
    this.socket.destroy();
  }
}

export function connectTcp(host: string, port: number): Promise<TcpTransport> {
  return new Promise((resolve, reject) => {
    const transport = new TcpTransport(host, port, () => resolve(transport));
    transport.onClose(() => reject(new Error("connection closed before connect")));
  });
}
