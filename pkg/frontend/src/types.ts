/** Wire types of the registry REST API (GET /api/v1/...). */

export interface SignalValues {
  text_relevance: number;
  category_match: number;
  quality: number;
  community: number;
}

export interface SearchResult {
  accession: string;
  name: string;
  summary: string;
  score: number;
  signals: SignalValues;
  categories: string[];
}

/** facets: dimension -> value -> count over the full filtered result set */
export interface SearchResponse {
  total: number;
  generation: number;
  results: SearchResult[];
  facets: Record<string, Record<string, number>>;
}

export interface Publication {
  doi: string | null;
  pmid: string | null;
  title: string;
  year: number | null;
  credit_badges: Record<string, string[]>;
}

export interface CodeVersion {
  version_label: string;
  operating_system: string;
  architecture: string;
  doi: string;
  uploaded_at: string;
  payload_digest: string;
  linked_publication: number | null;
}

export interface LinkProbe {
  at: string;
  outcome: "alive" | "broken" | "unreachable";
  http_status: number | null;
  latency: number;
}

export interface Review {
  user_id: string;
  accession: string;
  rating: number;
  text: string | null;
  at: string;
}

export interface ToolCard {
  accession: string;
  name: string;
  description: string;
  homepage_url: string;
  webmaster_email: string;
  category_ids: string[];
  spec: {
    software_type: string;
    interfaces: string[];
    operating_systems: string[];
    programming_languages: string[];
    license: string;
    computer_skills: string | null;
    stability: string;
    maintained: string;
    external_links: Record<string, string>;
  };
  publications: Publication[];
  versions: CodeVersion[];
  link_history: LinkProbe[];
  status: "draft" | "published" | "obsolete";
  rrid: string | null;
  created_at: string;
  updated_at: string;
  rating: { mean: number | null; count: number };
  reviews: Review[];
  comments: { user_id: string; at: string; text: string }[];
}

export interface RelatedTool {
  accession: string;
  name: string;
  summary: string;
  categories: string[];
  quality: number;
}

export interface ApiErrorBody {
  error: { code: string; message: string; field?: string; position?: number };
}
