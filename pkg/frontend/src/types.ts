/** Wire types for the reident search API. */

/** One row of a /api/search response: a track represented by its best shot. */
export interface TrackSummary {
  trackId: string;
  recordId: string;
  predictedMake: string;
  predictedModel: string;
  shapeScore: number;
  colorName?: string;
  colorScore?: number;
}

export interface SearchResponse {
  entries: TrackSummary[];
}

export interface TrackMember {
  id: string;
  frame: number | null;
  quality: number;
}

export interface TrackDetail {
  trackId: string;
  bestShotId: string;
  predictedMake: string;
  predictedModel: string;
  shapeScore: number;
  members: TrackMember[];
}

export interface ServiceMeta {
  galleryCount: number;
  trackCount: number;
  headVariant: string;
  dimension: number;
}

/** Optional record-id -> image path manifest; absent means placeholder thumbs. */
export type ThumbManifest = Record<string, string>;
