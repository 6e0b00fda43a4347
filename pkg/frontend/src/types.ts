// Wire types mirroring the service's JSON responses.

export interface ClassInfo {
  id: number;
  name: string;
}

export interface SessionInfo {
  session_id: string;
  acc_base: number;
  class_list: ClassInfo[];
  open_class: boolean;
  reveal_labels: boolean;
  test_size: number;
  misclassified_size: number;
}

export interface ItemPrediction {
  class_id: number;
  class_name: string;
}

export interface Item {
  id: string;
  prediction: ItemPrediction;
  distance: number;
  image: string | null;
  embedding_prefix: number[];
  label_hidden: boolean;
  corrected: boolean;
  label?: ItemPrediction;
}

export interface ItemPage {
  items: Item[];
  total: number;
  page: number;
  page_size: number;
}

export interface Alternative {
  class_id: number;
  class_name: string;
  distance: number;
}

export interface Prediction {
  class_id: number;
  class_name: string;
  distance: number;
  proto_id: number;
  alternatives: Alternative[];
}

export interface CorrectionOutcome {
  added_proto_id: number;
  evicted_proto_id: number | null;
  store_size_after: number;
  prediction_before: Prediction;
  prediction_after: Prediction;
}

export interface StoreStats {
  total: number;
  per_class: Record<string, number>;
  by_source: Record<string, number>;
  budget: number | null;
  dim: number;
}

export interface Metrics {
  acc_base: number;
  acc_e_live: number | null;
  acc_c_live: number;
  forgetting_live: number;
  store_stats: StoreStats;
  corrections: number;
}
