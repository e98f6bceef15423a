"""Tabular data synthesis with an autoencoder + latent WGAN-GP, column-order tools and metrics."""

from .association import (
    AssociationMatrix,
    association_matrix,
    correlation_ratio,
    cramers_v,
    cramers_v_from_table,
    dif_corr,
    pearson,
)
from .encoding import (
    EncodedMatrix,
    EncoderState,
    GmmParams,
    TableEncoder,
    decode_row,
    decode_table,
    em_fit_1d,
    encode_row,
    encode_table,
    fit_encoder,
)
from .evaluation import (
    evaluate,
    max_diff_percent,
    ml_utility_diff,
    sensitivity_experiment,
    table_wd,
    wd_1d,
)
from .report import EvalReport
from .schema_io import (
    ColumnSpec,
    RawTable,
    TableSchema,
    infer_schema,
    load_csv,
    load_report,
    load_schema,
    save_report,
    save_schema,
    split,
    write_csv,
)
from .sorting import (
    ColumnOrder,
    FeatureSorter,
    order_by_correlation,
    order_by_type,
    sort_features,
    sparsity_report,
    square_layout,
)

__version__ = "0.1.0"
