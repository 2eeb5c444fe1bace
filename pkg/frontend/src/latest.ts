/** Monotone request ids per panel: a response is applied only if no newer
 * request has been issued since, so a stale body can never overwrite a
 * fresher one. */

export class LatestGate {
  private issued = 0;
  private applied = 0;

  next(): number {
    return ++this.issued;
  }

  /** True (and records it) iff `id` is newer than everything applied so far. */
  accept(id: number): boolean {
    if (id <= this.applied) return false;
    this.applied = id;
    return true;
  }
}

/** Wrap an async producer so that only the freshest result reaches `apply`. */
export function latestOnly<A extends unknown[], R>(
  producer: (...args: A) => Promise<R>,
  apply: (result: R) => void,
  onError?: (err: unknown) => void,
): (...args: A) => Promise<void> {
  const gate = new LatestGate();
  return async (...args: A) => {
    const ticket = gate.next();
    try {
      const result = await producer(...args);
      if (gate.accept(ticket)) apply(result);
    } catch (err) {
      if (gate.accept(ticket) && onError) onError(err);
    }
  };
}
