import { describe, expect, it } from "vitest";

import {
  DEFAULT_LIMIT,
  DEFAULT_MIN_SCORE,
  defaultViewState,
  formatViewState,
  hasFilter,
  parseViewState,
  type ViewState,
} from "../src/urlstate.js";

describe("parseViewState", () => {
  it("returns defaults for an empty query string", () => {
    expect(parseViewState("")).toEqual(defaultViewState());
    expect(parseViewState("?")).toEqual(defaultViewState());
  });

  it("reads every control from the query string", () => {
    const state = parseViewState("?make=falken&model=vista&color=red&min_score=0.8&limit=5&track=track003");
    expect(state.query).toEqual({
      make: "falken",
      model: "vista",
      color: "red",
      minScore: 0.8,
      limit: 5,
    });
    expect(state.track).toBe("track003");
  });

  it("falls back to defaults on mangled numbers", () => {
    const state = parseViewState("?make=x&min_score=banana&limit=2.5");
    expect(state.query.minScore).toBe(DEFAULT_MIN_SCORE);
    expect(state.query.limit).toBe(DEFAULT_LIMIT);
  });

  it("clamps min_score into [0, 1] and rejects non-positive limits", () => {
    expect(parseViewState("?min_score=7").query.minScore).toBe(1);
    expect(parseViewState("?min_score=-3").query.minScore).toBe(0);
    expect(parseViewState("?limit=0").query.limit).toBe(DEFAULT_LIMIT);
    expect(parseViewState("?limit=-4").query.limit).toBe(DEFAULT_LIMIT);
  });
});

describe("formatViewState", () => {
  it("omits defaults entirely", () => {
    expect(formatViewState(defaultViewState())).toBe("");
  });

  it("writes only the fields that differ from defaults", () => {
    const state = defaultViewState();
    state.query.make = "falken";
    state.query.minScore = 0.75;
    expect(formatViewState(state)).toBe("?make=falken&min_score=0.75");
  });

  it("round-trips through parseViewState", () => {
    const state: ViewState = {
      query: { make: "falken", model: "vista#2", color: "", minScore: 0.31, limit: 7 },
      track: "track011",
    };
    expect(parseViewState(formatViewState(state))).toEqual(state);
  });

  it("trims filter whitespace on the way out", () => {
    const state = defaultViewState();
    state.query.color = "  red  ";
    expect(formatViewState(state)).toBe("?color=red");
  });
});

describe("hasFilter", () => {
  it("is false when no metadata filter is set", () => {
    expect(hasFilter(defaultViewState().query)).toBe(false);
    expect(hasFilter({ make: "  ", model: "", color: "", minScore: 0.9, limit: 3 })).toBe(false);
  });

  it("is true as soon as any one filter is set", () => {
    expect(hasFilter({ make: "falken", model: "", color: "", minScore: 0.5, limit: 20 })).toBe(true);
    expect(hasFilter({ make: "", model: "m3", color: "", minScore: 0.5, limit: 20 })).toBe(true);
    expect(hasFilter({ make: "", model: "", color: "red", minScore: 0.5, limit: 20 })).toBe(true);
  });
});
