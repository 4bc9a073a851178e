//! Instance documents, the synthetic case study, plan export, and maps.

mod case_study;
mod document;
mod export;
mod render;

pub use case_study::{
    generate_case_study, HORIZON as CASE_STUDY_HORIZON, TOTAL_AREA as CASE_STUDY_AREA,
};
pub use document::{
    load_document, load_instance, save_document, save_instance, InstanceDocument, FORMAT_VERSION,
};
pub use export::{
    export_plan, load_plan, load_states, plan_table_string, read_plan_table, state_records,
    write_plan_table, ExportedFiles, PlanRow, StateRecord, StatesDocument, PLAN_TABLE,
    STATES_DOCUMENT,
};
pub use render::{category_color, render_map, render_svg, FALLOW_COLOR};
