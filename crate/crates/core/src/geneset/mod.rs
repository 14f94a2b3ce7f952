//! Gene-set screening: per-set two-sample tests on an expression matrix,
//! multiplicity adjustment across sets, a within-group back-test and
//! histogram data for plotting.
//!
//! Expression files are genes × samples (one row per gene); tests see
//! samples × genes.

mod io;
mod pipeline;

pub use io::{
    load_expression, load_gmt, load_labels, parse_expression, parse_gmt, parse_labels, ExpressionMatrix, GeneSet,
    GeneSetCatalog, Labels, ResolvedSet,
};
pub use pipeline::{
    back_test_split, histogram_data, test_gene_sets, test_gene_sets_between, BackTest, GeneSetOptions, GeneSetReport,
    GeneSetRow, Histogram, OverlapStats, RESULTS_HEADER,
};
