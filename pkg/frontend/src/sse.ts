/**
 * Minimal SSE client over fetch streaming. Works in browsers and node 20+
 * (no EventSource dependency), and reconnects with full-snapshot replay:
 * the server resends all prior episodes on subscribe, so the consumer
 * resets its series on every (re)connection.
 */

export interface SseEvent {
  event: string;
  data: string;
  id: string;
}

export interface StreamHandlers {
  /** Called at every (re)connection before any event arrives. */
  onConnect?: () => void;
  onEvent: (ev: SseEvent) => void;
  /** Called when the stream ends for good (terminal event or closed). */
  onClose?: () => void;
  onError?: (err: unknown) => void;
}

export interface StreamHandle {
  close(): void;
  done: Promise<void>;
}

/** Incremental parser; feed arbitrary chunks, get complete events. */
export class SseParser {
  private buffer = "";

  push(chunk: string): SseEvent[] {
    this.buffer += chunk.replace(/\r\n/g, "\n");
    const events: SseEvent[] = [];
    let sep: number;
    while ((sep = this.buffer.indexOf("\n\n")) >= 0) {
      const block = this.buffer.slice(0, sep);
      this.buffer = this.buffer.slice(sep + 2);
      const ev: SseEvent = { event: "message", data: "", id: "" };
      const dataLines: string[] = [];
      for (const line of block.split("\n")) {
        if (line.startsWith("event:")) ev.event = line.slice(6).trim();
        else if (line.startsWith("data:")) dataLines.push(line.slice(5).trim());
        else if (line.startsWith("id:")) ev.id = line.slice(3).trim();
      }
      ev.data = dataLines.join("\n");
      if (ev.data !== "" || ev.event !== "message") {
        events.push(ev);
      }
    }
    return events;
  }
}

const RETRY_MS = 1000;

export function subscribe(url: string, handlers: StreamHandlers): StreamHandle {
  let closed = false;
  let abort = new AbortController();

  const done = (async () => {
    while (!closed) {
      const parser = new SseParser();
      let sawTerminal = false;
      try {
        const resp = await fetch(url, {
          headers: { Accept: "text/event-stream" },
          signal: abort.signal,
        });
        if (!resp.ok || !resp.body) {
          throw new Error(`stream request failed: HTTP ${resp.status}`);
        }
        handlers.onConnect?.();
        const reader = resp.body.getReader();
        const decoder = new TextDecoder();
        for (;;) {
          const { done: eof, value } = await reader.read();
          if (eof) break;
          for (const ev of parser.push(decoder.decode(value, { stream: true }))) {
            handlers.onEvent(ev);
            if (ev.event === "status") {
              sawTerminal = true;
            }
          }
          if (sawTerminal) break;
        }
      } catch (err) {
        if (!closed) handlers.onError?.(err);
      }
      if (sawTerminal || closed) break;
      // connection dropped mid-run: retry, server will replay the snapshot
      await new Promise((r) => setTimeout(r, RETRY_MS));
    }
    handlers.onClose?.();
  })();

  return {
    close() {
      closed = true;
      abort.abort();
    },
    done,
  };
}
