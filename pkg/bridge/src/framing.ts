// Incremental newline framing for the NDJSON transport.

const MAX_BUFFER_SIZE = 16 * 1024 * 1024;

export class LineSplitter {
  private buffer = "";

  /** Feed a chunk; returns every complete line it closed (trimmed, non-empty). */
  push(chunk: string): string[] {
    this.buffer += chunk;
    if (this.buffer.length > MAX_BUFFER_SIZE) {
      this.buffer = "";
      throw new Error("line exceeds maximum buffer size");
    }
    const pieces = this.buffer.split("\n");
    this.buffer = pieces.pop() ?? "";
    return pieces.map((line) => line.trim()).filter((line) => line.length > 0);
  }

  /** Remaining partial line, if any (called at end of stream). */
  flush(): string[] {
    const rest = this.buffer.trim();
    this.buffer = "";
    return rest ? [rest] : [];
  }
}
