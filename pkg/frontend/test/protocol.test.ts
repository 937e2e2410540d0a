import { describe, expect, it } from "vitest";

import { OBJECTIVE_NAMES, parseMessage, projectionKey } from "../src/protocol.js";

describe("parseMessage", () => {
  it("accepts well-formed frames", () => {
    const msg = parseMessage('{"kind": "hello", "payload": {"version": 1}}');
    expect(msg.kind).toBe("hello");
    expect(msg.payload).toEqual({ version: 1 });
  });

  it("rejects non-JSON frames", () => {
    expect(() => parseMessage("not json")).toThrow(/not valid JSON/);
  });

  it("rejects frames without a kind", () => {
    expect(() => parseMessage('{"payload": {}}')).toThrow(/kind/);
  });

  it("rejects non-object payloads", () => {
    expect(() => parseMessage('{"kind": "x", "payload": 3}')).toThrow(/payload/);
  });

  it("rejects arrays", () => {
    expect(() => parseMessage("[1,2]")).toThrow(/object/);
  });
});

describe("objective naming", () => {
  it("has five objectives in stable order", () => {
    expect(OBJECTIVE_NAMES).toHaveLength(5);
    expect(OBJECTIVE_NAMES[4]).toBe("semantic_agreement");
  });

  it("projection keys match the wire format", () => {
    expect(projectionKey([3, 4])).toBe("3-4");
  });
});
