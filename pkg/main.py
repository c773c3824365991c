# main.py

from pathlib import Path
from typing import Annotated, Any, Dict, Optional

import dotenv
import typer
from agno.utils.log import log_info, set_log_level_to_debug

# Rich for UI
from rich.console import Console
from rich.live import Live
from rich.panel import Panel
from rich.rule import Rule
from rich.table import Table
from rich.text import Text

# State and configuration
from settings import VERSION, ExperimentConfig, RuntimeSettings, load_config
from shared_state import EXIT_CONFIG_ERROR, SharedState
from Spectral.errors import ConfigError

# Node imports
from Nodes.artifact_writer_node import ArtifactWriterNode
from Nodes.config_refiner import ConfigRefiner
from Nodes.kernel_node import CertifyNode, KernelTableNode
from Nodes.oracle_node import AdversarialNode, ConcentrationProbeNode
from Nodes.planner_node import PlannerNode
from Nodes.recover_node import RecoverNode
from Nodes.sample_reader_node import SampleReaderNode
from Nodes.sweep_node import SweepNode
from Nodes.synth_node import SynthNode

dotenv.load_dotenv()


class SuperResolutionSystem:
    def __init__(self, settings: Optional[RuntimeSettings] = None):
        """Initializes all nodes and the console."""
        self.settings = settings or RuntimeSettings()
        workers = self.settings.workers
        self.nodes = {
            "synth_node": SynthNode(),
            "sample_reader_node": SampleReaderNode(),
            "recover_node": RecoverNode(),
            "sweep_node": SweepNode(workers=workers),
            "kernel_table_node": KernelTableNode(),
            "certify_node": CertifyNode(),
            "adversarial_node": AdversarialNode(),
            "concentration_node": ConcentrationProbeNode(workers=workers),
            "artifact_writer_node": ArtifactWriterNode(),
        }
        self.planner = PlannerNode()
        self.config_refiner = ConfigRefiner()
        self.console = Console(quiet=not self.settings.show_ui)

    def execute_task(
        self,
        config: ExperimentConfig,
        command: str,
        seed: Optional[int] = None,
        seed_count: Optional[int] = None,
    ) -> SharedState:
        """
        Runs one CLI command from start to finish with the planning/executing
        state loop, reporting each step in the terminal.
        """
        self.console.print()
        self.console.print(Rule(f"[bold blue]superres {VERSION}[/bold blue]", style="blue"))

        try:
            config = self.config_refiner.refine(config, seed=seed, seed_count=seed_count)
        except ConfigError as e:
            shared_state = SharedState(config=config, command=command)
            self.console.print(Panel(f"[bold red]{e}[/bold red]", title="[bold red]Invalid Configuration[/bold red]", border_style="red"))
            shared_state.log_execution_output(None, str(e), kind=e.kind)
            return shared_state

        shared_state = SharedState(config=config, command=command)
        self.console.print(
            Panel(
                f"[bold cyan]Command:[/bold cyan] {command}\n"
                f"[dim]config {config.config_hash()} | n={config.n} | seeds {config.seeds[0]}..{config.seeds[-1]} "
                f"({len(config.seeds)}) | out {shared_state.output_directory}[/dim]",
                title="[bold green]Run Started[/bold green]",
                border_style="green",
                padding=(1, 2),
            )
        )

        total_steps = 0

        with Live(console=self.console, screen=False, auto_refresh=True, transient=True) as live:
            while shared_state.current_status not in ["completed", "failed"]:
                current_status = shared_state.current_status

                try:
                    if current_status == "planning":
                        plan = self.planner.plan(shared_state.get_full_context())
                        if not plan:
                            error_msg = f"No plan exists for mode '{config.mode}'."
                            self.console.print(Panel(f"[bold red]{error_msg}[/bold red]", title="[bold red]Planning Failed[/bold red]", border_style="red"))
                            shared_state.log_execution_output(None, error_msg, kind="config")
                            continue

                        shared_state.update_plan(plan)
                        total_steps = len(plan)

                        table = Table(
                            title="[bold bright_magenta]Execution Plan[/bold bright_magenta]",
                            show_header=True,
                            header_style="bold magenta",
                            border_style="bright_magenta",
                        )
                        table.add_column("Step", style="dim", width=6, justify="center")
                        table.add_column("Node", style="cyan", width=22)
                        table.add_column("Command", style="white")
                        for i, p in enumerate(plan, 1):
                            table.add_row(f"[bold]{i}[/bold]", p["node"], p["description"])
                        self.console.print(table)

                        shared_state.update_status("executing")

                    elif current_status == "executing":
                        if not shared_state.current_plan:
                            shared_state.update_status("completed")
                            continue

                        step = shared_state.current_plan.pop(0)
                        node_key = step["node"]
                        current_step = total_steps - len(shared_state.current_plan)
                        live.update(Text(f"{node_key} | step {current_step}/{total_steps} | {step['description']}", style="bold blue"))

                        if node_key not in self.nodes:
                            error_msg = f"Node '{node_key}' not found!"
                            self.console.print(Panel(f"[bold red]{error_msg}[/bold red]", title="[bold red]Node Not Found[/bold red]", border_style="red"))
                            shared_state.log_execution_output(None, error_msg, kind="config")
                            continue

                        result = self.nodes[node_key].run(step["description"], shared_state)
                        self._apply_result(node_key, result, shared_state)

                except Exception as e:
                    self.console.print(f"[bold red]A critical error occurred in the main loop: {e}[/bold red]")
                    shared_state.log_execution_output(None, str(e), kind="solver")

        self._print_summary(shared_state)
        return shared_state

    def _apply_result(self, node_key: str, result: Dict[str, Any], shared_state: SharedState):
        if result.get("status") == "error":
            self.console.print(
                Panel(
                    f"[bold red]{result.get('error', 'Unknown error')}[/bold red]\n[dim]Node: {node_key}[/dim]",
                    title="[bold red]Step Failed[/bold red]",
                    border_style="red",
                    padding=(1, 2),
                )
            )
            shared_state.log_execution_output(result.get("output"), result.get("error", "Unknown error"), kind=result.get("kind"))
            return

        for f in result.get("created_files", []):
            shared_state.add_created_file(f)
        self.console.print(f"[green]{node_key}[/green] [dim]{result.get('output', '')}[/dim]")
        shared_state.log_execution_output(result.get("output"))

    def _print_summary(self, shared_state: SharedState):
        self.console.print(Rule("[bold blue]Run Summary[/bold blue]", style="blue"))
        if shared_state.created_files:
            table = Table(show_header=True, header_style="bold cyan", border_style="cyan")
            table.add_column("Artifact", style="white")
            for f in shared_state.created_files:
                table.add_row(f)
            self.console.print(table)

        status = shared_state.current_status.upper()
        style = "green" if shared_state.exit_code == 0 else "red"
        lines = [f"[bold {style}]Status: {status}[/bold {style}]", f"[dim]Exit code:[/dim] {shared_state.exit_code}"]
        if shared_state.last_execution_error:
            lines.append(f"[dim]Error ({shared_state.error_kind}):[/dim] {shared_state.last_execution_error}")
        if shared_state.recovery_failed:
            lines.append("[yellow]At least one recovery did not meet its stopping threshold.[/yellow]")
        self.console.print(Panel("\n".join(lines), border_style=style, padding=(1, 2)))
        log_info(f"{shared_state.command} finished with status {status} (exit {shared_state.exit_code}).")


# --- CLI ---

app = typer.Typer(
    name="superres",
    help="Off-the-grid frequency recovery: synthesize, recover, sweep and certify.",
    add_completion=False,
    no_args_is_help=True,
)

ConfigOption = Annotated[Optional[Path], typer.Option("--config", help="YAML experiment configuration.")]
SeedOption = Annotated[Optional[int], typer.Option("--seed", help="Base seed.")]
SeedsOption = Annotated[Optional[int], typer.Option("--seeds", help="Number of consecutive seeds starting at the base seed.")]
OutOption = Annotated[Optional[Path], typer.Option("--out", help="Output directory.")]
AlgoOption = Annotated[Optional[str], typer.Option("--algo", help="omp, sliding_omp or two_stage_omp.")]
AlphaOption = Annotated[Optional[int], typer.Option("--alpha", help="Preconditioner order: 1, 2 or 4.")]
GammaOption = Annotated[Optional[float], typer.Option("--gamma", help="Stopping threshold on the correlation.")]
FloorOption = Annotated[Optional[float], typer.Option("--amplitude-floor", help="Smallest amplitude to recover; sets gamma to half of it.")]
ExactCountOption = Annotated[bool, typer.Option("--exact-count-mask", help="Observe exactly 'measurements' indices instead of a Bernoulli mask.")]
StrictOption = Annotated[bool, typer.Option("--strict", help="Exit 1 when a recovery fails.")]
WorkersOption = Annotated[Optional[int], typer.Option("--workers", help="Parallel jobs for sweeps and probes.")]
NOption = Annotated[Optional[int], typer.Option("--n", help="Bandwidth: samples run over -n..n.")]


def run_command(
    mode: str,
    config_path: Optional[Path] = None,
    seed: Optional[int] = None,
    seeds: Optional[int] = None,
    out: Optional[Path] = None,
    strict: bool = False,
    exact_count_mask: bool = False,
    **overrides: Any,
) -> int:
    """Loads the configuration, runs the system and returns the exit code."""
    settings = RuntimeSettings()
    if settings.debug:
        set_log_level_to_debug()
    console = Console(stderr=True)

    try:
        config = load_config(
            config_path,
            mode=mode,
            out=str(out) if out is not None else None,
            strict=True if strict else None,
            exact_count_mask=True if exact_count_mask else None,
            **overrides,
        )
        if out is None and "out" not in config.model_fields_set:
            config = config.model_copy(update={"out": settings.output_dir})
    except ConfigError as e:
        console.print(f"[bold red]Configuration error:[/bold red] {e}")
        return EXIT_CONFIG_ERROR

    system = SuperResolutionSystem(settings)
    shared_state = system.execute_task(config, f"superres {mode}", seed=seed, seed_count=seeds)
    return shared_state.exit_code


def _finish(code: int):
    raise typer.Exit(code=code)


@app.command()
def synth(
    config: ConfigOption = None,
    seed: SeedOption = None,
    seeds: SeedsOption = None,
    out: OutOption = None,
    exact_count_mask: ExactCountOption = False,
    n: NOption = None,
):
    """Synthesize sample files and their ground truth."""
    _finish(run_command("synth", config, seed, seeds, out, exact_count_mask=exact_count_mask, n=n))


@app.command()
def recover(
    input: Annotated[Path, typer.Argument(help="Sample file with columns ell,re,im,observed.")],
    config: ConfigOption = None,
    out: OutOption = None,
    algo: AlgoOption = None,
    alpha: AlphaOption = None,
    gamma: GammaOption = None,
    amplitude_floor: FloorOption = None,
    strict: StrictOption = False,
):
    """Recover frequencies and amplitudes from a sample file."""
    _finish(
        run_command(
            "recover", config, None, None, out, strict=strict,
            input=str(input), algorithm=algo, alpha=alpha, gamma=gamma, amplitude_floor=amplitude_floor,
        )
    )


@app.command("sweep-dyn")
def sweep_dyn(
    config: ConfigOption = None,
    seed: SeedOption = None,
    seeds: SeedsOption = None,
    out: OutOption = None,
    gamma: GammaOption = None,
    exact_count_mask: ExactCountOption = False,
    strict: StrictOption = False,
    workers: WorkersOption = None,
    n: NOption = None,
):
    """Failure rate against the dynamic range u."""
    _finish(
        run_command(
            "sweep-dyn", config, seed, seeds, out, strict=strict, exact_count_mask=exact_count_mask,
            gamma=gamma, workers=workers, n=n,
        )
    )


@app.command("sweep-sep")
def sweep_sep(
    config: ConfigOption = None,
    seed: SeedOption = None,
    seeds: SeedsOption = None,
    out: OutOption = None,
    gamma: GammaOption = None,
    exact_count_mask: ExactCountOption = False,
    strict: StrictOption = False,
    workers: WorkersOption = None,
    n: NOption = None,
):
    """Failure rate against the separation n*Delta."""
    _finish(
        run_command(
            "sweep-sep", config, seed, seeds, out, strict=strict, exact_count_mask=exact_count_mask,
            gamma=gamma, workers=workers, n=n,
        )
    )


@app.command("kernel-table")
def kernel_table(
    config: ConfigOption = None,
    out: OutOption = None,
    n: NOption = None,
):
    """Sampled kernel values for every configured alpha."""
    _finish(run_command("kernel-table", config, None, None, out, n=n))


@app.command()
def certify(
    config: ConfigOption = None,
    out: OutOption = None,
    alpha: AlphaOption = None,
    n: NOption = None,
):
    """Check the kernel envelopes numerically."""
    _finish(run_command("certify", config, None, None, out, alpha=alpha, n=n))


@app.command()
def adversarial(
    config: ConfigOption = None,
    out: OutOption = None,
    n: NOption = None,
):
    """Run plain and preconditioned pursuit on the three-spike trap instance."""
    _finish(run_command("adversarial", config, None, None, out, n=n))


@app.command("probe-concentration")
def probe_concentration(
    config: ConfigOption = None,
    seed: SeedOption = None,
    out: OutOption = None,
    alpha: AlphaOption = None,
    workers: WorkersOption = None,
    n: NOption = None,
):
    """Monte-Carlo deviation of the subsampled kernel from its mean."""
    _finish(run_command("probe-concentration", config, seed, None, out, alpha=alpha, workers=workers, n=n))


# --- Main Execution Block ---
if __name__ == "__main__":
    app()
