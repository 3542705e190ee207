/** Keyboard-to-action mapping and hold-repeat logic.
 *
 *  The viewer steps the world in lockstep: one keypress issues one step,
 *  holding a key repeats it at 30 Hz, and at most one step request is in
 *  flight at a time (pipeline depth 1).
 */

export const ACTIONS = {
  NOOP: 0,
  FORWARD: 1,
  BACK: 2,
  STRAFE_LEFT: 3,
  STRAFE_RIGHT: 4,
  TURN_LEFT: 5,
  TURN_RIGHT: 6,
  LOOK_UP: 7,
  LOOK_DOWN: 8,
  JUMP: 9,
  INTERACT: 10,
} as const;

export const KEY_BINDINGS: Record<string, number> = {
  KeyW: ACTIONS.FORWARD,
  KeyS: ACTIONS.BACK,
  KeyA: ACTIONS.STRAFE_LEFT,
  KeyD: ACTIONS.STRAFE_RIGHT,
  ArrowLeft: ACTIONS.TURN_LEFT,
  ArrowRight: ACTIONS.TURN_RIGHT,
  ArrowUp: ACTIONS.LOOK_UP,
  ArrowDown: ACTIONS.LOOK_DOWN,
  Space: ACTIONS.JUMP,
  KeyE: ACTIONS.INTERACT,
};

export const REPEAT_INTERVAL_MS = 1000 / 30;

export function actionForKey(code: string): number | null {
  return code in KEY_BINDINGS ? KEY_BINDINGS[code] : null;
}

/** Tracks held keys and decides which step to issue next.
 *
 *  next(now) returns an action code when a step should be sent, or null
 *  when the world stays paused. Callers must report request completion via
 *  stepDone() before another step is produced (pipeline depth 1).
 */
export class InputTracker {
  private held: string[] = [];
  private pressQueue: number[] = [];
  private inFlight = false;
  private lastRepeatAt = -Infinity;

  keyDown(code: string, now: number): void {
    const action = actionForKey(code);
    if (action === null) {
      return;
    }
    if (!this.held.includes(code)) {
      this.held.push(code);
      this.pressQueue.push(action); // the tap itself always fires one step
      this.lastRepeatAt = now;
    }
    // key-repeat events from the OS are coalesced: already held -> ignore
  }

  keyUp(code: string): void {
    this.held = this.held.filter((c) => c !== code);
  }

  /** Action to send now, or null. Marks a request as in flight. */
  next(now: number): number | null {
    if (this.inFlight) {
      return null;
    }
    const queued = this.pressQueue.shift();
    if (queued !== undefined) {
      this.inFlight = true;
      return queued;
    }
    if (this.held.length === 0) {
      return null;
    }
    if (now - this.lastRepeatAt < REPEAT_INTERVAL_MS) {
      return null;
    }
    this.lastRepeatAt = now;
    this.inFlight = true;
    // most recently pressed held key wins
    return actionForKey(this.held[this.held.length - 1]);
  }

  stepDone(): void {
    this.inFlight = false;
  }

  get pending(): boolean {
    return this.inFlight;
  }
}
