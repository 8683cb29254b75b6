'''Static plots of runs and replications

Run functions
-------------
- These functions read the per-slot table of one run (`simulate.records_to_dataframe`
  or the `slots.csv` it is written to):
    - render_sum_rate
    - render_trajectories
    - render_cooperative_snapshot

Replication functions
---------------------
- These functions read the aggregate table of a replication:
    - render_subchannel_scaling
'''
import re
import numpy as np
import pandas as pd
from coopuav.logger import logger

from typing import Dict, List, Tuple

import matplotlib
import matplotlib.pyplot as plt
import seaborn as sns

from .geometry import Point3
from .names import COLUMNS, MODES

# Constants
DEFAULT_SNS_CMAP = 'deep'
BS_COLOR = 'black'
U2N_COLOR = 'steelblue'
U2U_COLOR = 'darkorange'
TASK_COLOR = 'grey'

_UAV_COLUMN = re.compile(r'^uav(\d+)_x$')


def uav_ids_of(df: pd.DataFrame) -> List[int]:
    '''UAV ids that have columns in a per-slot table, sorted
    '''
    ids = []
    for c in df.columns:
        m = _UAV_COLUMN.match(c)
        if m is not None:
            ids.append(int(m.group(1)))
    return sorted(ids)

def _set_default_matplotlib_params(ax: matplotlib.pyplot.Axes=None, title: str=None,
    xlabel: str=None, ylabel: str=None, figsize: Tuple[float, float]=None) -> matplotlib.pyplot.Axes:
    '''Make an Axes if needed and set its labels

    Parameters
    ----------
    ax : matplotlib.pyplot.Axes, None
        Axes we are plotting on. If None we make a new one
    title, xlabel, ylabel : str, None
        Labels. If None we do not set them
    figsize : 2-tuple, None
        Only used if `ax` is None

    Returns
    -------
    matplotlib.pyplot.Axes
    '''
    if ax is None:
        fig = plt.figure(figsize=figsize)
        ax = fig.add_subplot(111)
    if title is not None:
        ax.set_title(title)
    if xlabel is not None:
        ax.set_xlabel(xlabel)
    if ylabel is not None:
        ax.set_ylabel(ylabel)
    return ax

def render_sum_rate(df: pd.DataFrame, ax: matplotlib.pyplot.Axes=None, window: int=1,
    label: str=None, title: str='System sum-rate', **kwargs) -> matplotlib.pyplot.Axes:
    '''Sum-rate over time

    Parameters
    ----------
    df : pandas.DataFrame
        Per-slot table
    ax : matplotlib.pyplot.Axes, None
    window : int
        Length of the moving average, in slots
    label : str, None
        Legend label
    '''
    if window < 1:
        raise ValueError('`window` ({}) must be >= 1'.format(window))
    ax = _set_default_matplotlib_params(ax=ax, title=title, xlabel='Time (s)',
        ylabel='Sum-rate (Mbit/s)')
    rate = df[COLUMNS.SUM_RATE].rolling(window, min_periods=1).mean() / 1e6
    ax.plot(df[COLUMNS.TIME], rate, label=label, **kwargs)
    if label is not None:
        ax.legend()
    return ax

def render_trajectories(df: pd.DataFrame, bs: Point3=None, task_centers: Dict[str, Point3]=None,
    ax: matplotlib.pyplot.Axes=None, cmap: str=DEFAULT_SNS_CMAP,
    title: str='Trajectories') -> matplotlib.pyplot.Axes:
    '''Top-down view of the UAV paths. Start points are circles, end points
    triangles.
    '''
    ax = _set_default_matplotlib_params(ax=ax, title=title, xlabel='x (m)', ylabel='y (m)')
    uav_ids = uav_ids_of(df)
    colors = sns.color_palette(cmap, n_colors=max(len(uav_ids), 1))
    for color, uid in zip(colors, uav_ids):
        x = df[COLUMNS.uav_column(uid, 'x')].to_numpy()
        y = df[COLUMNS.uav_column(uid, 'y')].to_numpy()
        ax.plot(x, y, color=color, label='UAV {}'.format(uid))
        ax.scatter(x[:1], y[:1], color=color, marker='o')
        ax.scatter(x[-1:], y[-1:], color=color, marker='^')
    if task_centers:
        for tid, c in task_centers.items():
            ax.scatter([c.x], [c.y], color=TASK_COLOR, marker='x')
            ax.annotate(tid, (c.x, c.y), fontsize=8, color=TASK_COLOR)
    if bs is not None:
        ax.scatter([bs.x], [bs.y], color=BS_COLOR, marker='s', s=60, label='BS')
    ax.set_aspect('equal', adjustable='datalim')
    ax.legend(loc='best', fontsize=8)
    return ax

def render_cooperative_snapshot(df: pd.DataFrame, slot: int, bs: Point3,
    ax: matplotlib.pyplot.Axes=None, title: str=None) -> matplotlib.pyplot.Axes:
    '''Top-down view of the links of one slot: U2N links to the base station
    and U2U links to the relays.
    '''
    rows = df[df[COLUMNS.SLOT] == slot]
    if len(rows) == 0:
        raise ValueError('`slot` ({}) is not in the table'.format(slot))
    row = rows.iloc[0]
    if title is None:
        title = 'Slot {}'.format(slot)
    ax = _set_default_matplotlib_params(ax=ax, title=title, xlabel='x (m)', ylabel='y (m)')

    pos = {uid: (row[COLUMNS.uav_column(uid, 'x')], row[COLUMNS.uav_column(uid, 'y')])
        for uid in uav_ids_of(df)}
    for uid, (x, y) in pos.items():
        mode = row[COLUMNS.uav_column(uid, 'mode')]
        subchannels = row[COLUMNS.uav_column(uid, 'subchannels')]
        active = not pd.isna(subchannels) and str(subchannels) != ''
        if mode == MODES.U2N and active:
            ax.plot([x, bs.x], [y, bs.y], color=U2N_COLOR, linestyle='-', linewidth=1)
        elif mode == MODES.U2U and active:
            relay = int(float(row[COLUMNS.uav_column(uid, 'relay')]))
            rx, ry = pos[relay]
            ax.annotate('', xy=(rx, ry), xytext=(x, y),
                arrowprops=dict(arrowstyle='->', color=U2U_COLOR))
        ax.scatter([x], [y], color=U2U_COLOR if mode == MODES.U2U else U2N_COLOR, zorder=3)
        ax.annotate(str(uid), (x, y), textcoords='offset points', xytext=(4, 4))
    ax.scatter([bs.x], [bs.y], color=BS_COLOR, marker='s', s=60, zorder=3)
    ax.set_aspect('equal', adjustable='datalim')
    return ax

def render_subchannel_scaling(aggregate: pd.DataFrame, ax: matplotlib.pyplot.Axes=None,
    cmap: str=DEFAULT_SNS_CMAP, title: str='Sum-rate vs. subchannels') -> matplotlib.pyplot.Axes:
    '''Mean sum-rate of each scheme against the subchannel count, with the
    95% intervals as error bars
    '''
    ax = _set_default_matplotlib_params(ax=ax, title=title, xlabel='Subchannels',
        ylabel='Mean sum-rate (Mbit/s)')
    low_name, high_name = COLUMNS.ci_columns(COLUMNS.MEAN_SUM_RATE)
    schemes = list(dict.fromkeys(aggregate[COLUMNS.SCHEME]))
    colors = sns.color_palette(cmap, n_colors=max(len(schemes), 1))
    for color, scheme in zip(colors, schemes):
        sub = aggregate[aggregate[COLUMNS.SCHEME] == scheme].sort_values(COLUMNS.N_SUBCHANNELS)
        mean = sub[COLUMNS.MEAN_SUM_RATE].to_numpy(dtype=float) / 1e6
        err = np.stack([mean - sub[low_name].to_numpy(dtype=float) / 1e6,
            sub[high_name].to_numpy(dtype=float) / 1e6 - mean])
        ax.errorbar(sub[COLUMNS.N_SUBCHANNELS], mean, yerr=err, color=color, marker='o',
            capsize=3, label=scheme)
    ax.legend()
    return ax

def savefig(ax: matplotlib.pyplot.Axes, path: str):
    fig = ax.get_figure()
    fig.tight_layout()
    fig.savefig(path)
    plt.close(fig)
    logger.info('Plot written to `{}`'.format(path))
