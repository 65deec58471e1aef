//! Reply-level lexical counters and tree-shape metrics.

pub mod lexical;
pub mod structural;

pub use lexical::{
    classify_links, classify_urls, count_disclosures, count_gratitude, count_laughter,
    detect_compliments, has_first_person, DomainLists, LinkCounts,
};
pub use structural::{
    community_score, conversation_depth, count_replies, structural_metrics, sustained_stats,
    StructuralMetrics,
};
