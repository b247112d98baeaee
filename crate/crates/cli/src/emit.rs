use std::path::PathBuf;

use clap::{Args, ValueEnum};

use vrpwdn::milp::{build, write_model, BuildOptions, FileFormat, Formulation};

use crate::{load_instance, CliError};

#[derive(ValueEnum, Debug, Clone, Copy, PartialEq, Eq)]
pub enum Which {
    Time,
    Flow,
    Node,
    All,
}

#[derive(ValueEnum, Debug, Clone, Copy, PartialEq, Eq)]
pub enum Vi {
    Off,
    On,
    Both,
}

#[derive(ValueEnum, Debug, Clone, Copy, PartialEq, Eq)]
pub enum ModelFormat {
    Lp,
    Mps,
}

#[derive(Args, Debug)]
pub struct EmitArgs {
    instance: PathBuf,
    #[arg(long, value_enum, default_value_t = Which::All)]
    formulation: Which,
    /// Valid inequalities.
    #[arg(long, value_enum, default_value_t = Vi::Off)]
    vi: Vi,
    #[arg(long, value_enum, default_value_t = ModelFormat::Lp)]
    format: ModelFormat,
    /// Write the pickup-load rows of the node-based model exactly as
    /// printed, which leaves them without arc terms.
    #[arg(long)]
    vacuous_pickup_load: bool,
    /// Use the printed big-M constants in the time-based model instead of
    /// the corrected ones.
    #[arg(long)]
    printed_big_m: bool,
    /// Output directory.
    #[arg(long, short, default_value = ".")]
    out: PathBuf,
}

pub fn emit(a: EmitArgs) -> Result<(), CliError> {
    let inst = load_instance(&a.instance)?;
    let formulations: Vec<Formulation> = match a.formulation {
        Which::Time => vec![Formulation::TimeBased],
        Which::Flow => vec![Formulation::FlowBased],
        Which::Node => vec![Formulation::NodeBased],
        Which::All => Formulation::ALL.to_vec(),
    };
    let vis: &[bool] = match a.vi {
        Vi::Off => &[false],
        Vi::On => &[true],
        Vi::Both => &[false, true],
    };
    let format = match a.format {
        ModelFormat::Lp => FileFormat::Lp,
        ModelFormat::Mps => FileFormat::Mps,
    };
    std::fs::create_dir_all(&a.out)?;
    for f in formulations {
        for &with_vi in vis {
            let model = build(&inst, f, BuildOptions { with_vi, vacuous_pickup_load: a.vacuous_pickup_load, printed_big_m: a.printed_big_m });
            let tag = f.label().split('-').next().unwrap();
            let name = format!("{}_{tag}_{}.{}", inst.name(), if with_vi { "vi" } else { "novi" }, format.extension());
            let path = a.out.join(name);
            write_model(&model, format, &path)?;
            println!("{}  rows {}  variables {}", path.display(), model.row_count(), model.variable_count());
        }
    }
    Ok(())
}
