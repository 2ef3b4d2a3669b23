export interface TagEntry {
  tag: string;
  origin: string;
  score?: number;
}

export interface DesignSummary {
  id: string;
  title: string | null;
  image_url: string;
  tags: string[];
}

export interface DesignPage {
  page: number;
  page_size: number;
  total: number;
  designs: DesignSummary[];
}

export interface DesignDetail {
  id: string;
  title: string | null;
  image_url: string;
  tags: TagEntry[];
}

export interface Recommendation {
  tag: string;
  score: number;
}

export interface RecommendationList {
  design: string;
  recommendations: Recommendation[];
}

export interface Explanation {
  design: string;
  tag: string;
  saliency_png: string;
  width: number;
  height: number;
  top_tags: { tag: string; score: number }[];
}

export interface SearchResult extends DesignSummary {
  matches: TagEntry[];
}

export interface SearchResponse {
  query: string[];
  results: SearchResult[];
}

export interface CurationResponse {
  design: string;
  action: string;
  tag: string;
  origin: string;
  score?: number;
}

export interface MorphGroupInfo {
  canonical: string;
  variants: string[];
  kinds: Record<string, string>;
}

export interface Vocabulary {
  categories: Record<string, Record<string, string[]>>;
  groups: MorphGroupInfo[];
}
