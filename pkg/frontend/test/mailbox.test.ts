import { describe, expect, it } from "vitest";

import { LatestFrameMailbox } from "../src/mailbox";

describe("LatestFrameMailbox", () => {
  it("starts empty", () => {
    const box = new LatestFrameMailbox<number>();
    expect(box.take()).toBeNull();
    expect(box.dropped).toBe(0);
  });

  it("holds only the newest frame and counts the overwritten ones", () => {
    const box = new LatestFrameMailbox<number>();
    box.put(1);
    box.put(2);
    box.put(3);
    expect(box.dropped).toBe(2);
    expect(box.take()).toBe(3);
    expect(box.take()).toBeNull(); // never queues
  });

  it("peek does not clear the slot", () => {
    const box = new LatestFrameMailbox<string>();
    box.put("a");
    expect(box.peek()).toBe("a");
    expect(box.take()).toBe("a");
    expect(box.peek()).toBeNull();
  });

  it("a taken slot stops counting drops", () => {
    const box = new LatestFrameMailbox<number>();
    box.put(1);
    box.take();
    box.put(2);
    expect(box.dropped).toBe(0);
  });
});
