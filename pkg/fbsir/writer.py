import logging
import math
import os
from dataclasses import asdict

import h5py
import numpy as np
import pandas as pd
from rich.progress import Progress

from fbsir.analysis import SERIES_COLUMNS
from fbsir.utils.plotter import plot_profiles, plot_series

logger = logging.getLogger(__name__)

FLOAT_FORMAT = "%.17g"


class Writer:
    """
    Writes the artifacts of a run.

    Args:

        outcome (RunOutcome): run to write
        outdir (str): Output directory for the files
        outname (str): Prefix of the files
        progress (bool): Set to it to false to disable progress bars

    """

    def __init__(self, outcome, outdir=None, outname=None, progress=True):
        self.outcome = outcome
        self.outdir = outdir if outdir else "."
        self.outname = outname if outname else "fbsir_run"
        self.progress = progress
        os.makedirs(self.outdir, exist_ok=True)

        logger.debug("Writer Attributes:-")
        for arg, value in sorted(vars(self).items()):
            if arg != "outcome":
                logger.debug("Attribute %s: %r", arg, value)

    def _path(self, suffix):
        return os.path.join(self.outdir, f"{self.outname}{suffix}")

    def to_csv(self):
        """
        Writes the time series, header t,h,dhdt,sup_S,sup_I,sup_R,mass_I,balance_residual.

        Returns:
            str: path of the CSV file

        """
        path = self._path("_series.csv")
        self.outcome.series.to_csv(
            path,
            index=False,
            columns=list(SERIES_COLUMNS),
            float_format=FLOAT_FORMAT,
            na_rep="nan",
        )
        logger.info(f"Time series written to {path}")
        return path

    def to_profiles(self):
        """
        Writes one r,S,I,R CSV file per saved frame and an index with the frame
        times and front positions.

        Returns:
            list: paths of the written files, index first

        """
        frames = self.outcome.frames
        if not frames:
            logger.warning("No saved profiles, run with save_profiles to write them")
            return []
        index_path = self._path("_profiles.csv")
        index = pd.DataFrame(
            {
                "frame": np.arange(len(frames)),
                "t": [frame.t for frame in frames],
                "h": [frame.h for frame in frames],
            }
        )
        index.to_csv(index_path, index=False, float_format=FLOAT_FORMAT)
        paths = [index_path]
        with Progress() as progress:
            task = progress.add_task(
                "[green]Writing profiles...", total=len(frames), visible=self.progress
            )
            for number, frame in enumerate(frames):
                path = self._path(f"_profile_{number:05d}.csv")
                pd.DataFrame(
                    {"r": frame.r, "S": frame.s, "I": frame.i, "R": frame.rec}
                ).to_csv(path, index=False, float_format=FLOAT_FORMAT)
                paths.append(path)
                progress.update(task, advance=1)
        logger.info(f"Wrote {len(frames)} profile files to {self.outdir}")
        return paths

    def to_h5(self):
        """
        Writes the whole run to a single HDF5 file: thresholds, diagnostics and
        scenario as attributes, series and profiles as gzip datasets.

        Returns:
            str: path of the HDF5 file

        """
        path = self._path(".h5")
        outcome = self.outcome
        logger.info(f"Saving h5 file {path}.")
        with h5py.File(path, "w") as f:
            f.attrs["classification"] = outcome.classification
            f.attrs["fixed_domain"] = outcome.fixed_domain
            for group_name, values in (
                ("thresholds", outcome.report.to_dict()),
                ("diagnostics", outcome.diagnostics),
                ("params", asdict(outcome.params)),
                ("time", asdict(outcome.cfg)),
            ):
                group = f.create_group(group_name)
                for key, value in values.items():
                    group.attrs[key] = value
            f.attrs["h0"] = outcome.init.h0
            f.attrs["L"] = outcome.grid.L
            f.attrs["N_L"] = outcome.grid.n_l
            f.attrs["N_h"] = outcome.grid.n_h

            series = outcome.series[list(SERIES_COLUMNS)].to_numpy(dtype=np.float64)
            series_dset = f.create_dataset(
                "series",
                data=series,
                dtype=series.dtype,
                compression="gzip",
                compression_opts=9,
            )
            series_dset.attrs["columns"] = list(SERIES_COLUMNS)
            series_dset.dims[0].label = "frame"
            series_dset.dims[1].label = "quantity"

            profiles = f.create_group("profiles")
            for number, frame in enumerate(outcome.frames):
                group = profiles.create_group(f"frame_{number:05d}")
                group.attrs["t"] = frame.t
                group.attrs["h"] = frame.h
                for key, values in (
                    ("r", frame.r),
                    ("S", frame.s),
                    ("I", frame.i),
                    ("R", frame.rec),
                    ("r_mapped", frame.r_mapped),
                    ("I_mapped", frame.i_mapped),
                    ("R_mapped", frame.rec_mapped),
                ):
                    group.create_dataset(
                        key, data=values, compression="gzip", compression_opts=9
                    )
        return path

    def to_svg(self):
        """
        Draws h(t) and sup I(t), and the infected profiles when frames were
        saved.

        Returns:
            list: paths of the SVG files

        """
        report = self.outcome.report
        h0_star = report.h0_star if math.isfinite(report.h0_star) else None
        h0 = None if self.outcome.fixed_domain else self.outcome.init.h0
        paths = [
            plot_series(self.outcome.series, self._path("_series.svg"), h0=h0, h0_star=h0_star)
        ]
        if self.outcome.frames:
            paths.append(plot_profiles(self.outcome.frames, self._path("_profiles.svg")))
        logger.info(f"Charts written to {', '.join(paths)}")
        return paths
