"""Figure rendering for traces and quorum analyses.

Message-flow diagrams put one horizontal lane per node and draw each
delivered message as a line from its send to its receive; protocol
events sit on the lanes as markers.  Quorum diagrams show the
node-membership matrix of every quorum with intact sets highlighted.
Figures render through the Agg backend so report paths work headless.
"""

from __future__ import annotations

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt
from matplotlib.lines import Line2D

from fbqsim.events import (
    CRASH,
    DECIDE,
    DELIVER_BATCH,
    DELIVER_EV,
    PROPOSE,
    RECEIVE,
    RECEIVE_BATCH,
    SEND,
    SEND_BATCH,
    START_TIMER,
    TIMEOUT,
    SimEvent,
)
from fbqsim.fbqs import FaultModel, Fbqs, enumerate_quorums, node_name

_MARKERS = {
    PROPOSE: ("^", "tab:blue", "propose"),
    DECIDE: ("*", "tab:green", "decide"),
    DELIVER_EV: ("o", "tab:green", "deliver"),
    DELIVER_BATCH: ("o", "tab:olive", "deliver-batch"),
    TIMEOUT: ("x", "tab:red", "timeout"),
    START_TIMER: ("|", "tab:orange", "start-timer"),
    CRASH: ("X", "black", "crash"),
}


def plot_trace(events: list[SimEvent], n: int, path: str, title: str = "") -> None:
    """Render a space-time message-flow diagram to ``path``."""
    fig, ax = plt.subplots(figsize=(11, 1.2 + 0.9 * n))
    end_time = max((ev.time for ev in events), default=1)

    pending: dict[tuple, list[tuple[int, int]]] = {}
    for ev in events:
        if ev.kind in (SEND, SEND_BATCH):
            peer = ev.payload[-1] if ev.kind == SEND else ev.payload[0]
            key = (ev.node, peer)
            pending.setdefault(key, []).append((ev.time, ev.node))
        elif ev.kind in (RECEIVE, RECEIVE_BATCH):
            peer = ev.payload[-1] if ev.kind == RECEIVE else ev.payload[0]
            key = (peer, ev.node)
            queue = pending.get(key)
            if queue:
                t0, sender = queue.pop(0)
                ax.plot(
                    [t0, ev.time],
                    [sender, ev.node],
                    color="0.8",
                    linewidth=0.6,
                    zorder=1,
                )

    seen_kinds = set()
    for ev in events:
        style = _MARKERS.get(ev.kind)
        if style is None:
            continue
        marker, color, _label = style
        seen_kinds.add(ev.kind)
        ax.scatter([ev.time], [ev.node], marker=marker, color=color, s=60, zorder=3)

    ax.set_yticks(range(n))
    ax.set_yticklabels([node_name(v) for v in range(n)])
    ax.set_ylim(-0.6, n - 0.4)
    ax.invert_yaxis()
    ax.set_xlim(-0.5, end_time + 0.5)
    ax.set_xlabel("simulated time")
    if title:
        ax.set_title(title)
    handles = [
        Line2D([], [], linestyle="", marker=_MARKERS[k][0], color=_MARKERS[k][1],
               label=_MARKERS[k][2])
        for k in sorted(seen_kinds)
    ]
    if handles:
        ax.legend(handles=handles, loc="upper left", bbox_to_anchor=(1.01, 1.0),
                  frameon=False, fontsize=8)
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)


def plot_quorums(
    s: Fbqs,
    fm: FaultModel,
    intact_sets: tuple[frozenset[int], ...],
    path: str,
    title: str = "",
) -> None:
    """Render the quorum membership matrix with intact sets highlighted."""
    quorums = enumerate_quorums(s)
    n = len(s.universe)
    fig, ax = plt.subplots(figsize=(1.5 + 0.6 * n, 1.0 + 0.35 * max(1, len(quorums))))
    for row, quorum in enumerate(quorums):
        for col, v in enumerate(s.universe):
            if v in quorum:
                inside = any(quorum <= i for i in intact_sets)
                color = "tab:green" if inside else "tab:blue"
                ax.add_patch(plt.Rectangle((col - 0.4, row - 0.4), 0.8, 0.8, color=color))
    for col, v in enumerate(s.universe):
        if v in fm.faulty:
            ax.axvspan(col - 0.5, col + 0.5, color="tab:red", alpha=0.15)
    ax.set_xticks(range(n))
    ax.set_xticklabels([node_name(v) for v in s.universe])
    ax.set_yticks(range(len(quorums)))
    ax.set_yticklabels(
        ["{" + " ".join(node_name(v) for v in sorted(q)) + "}" for q in quorums], fontsize=7
    )
    ax.set_xlim(-0.5, n - 0.5)
    ax.set_ylim(-0.5, max(0.5, len(quorums) - 0.5))
    ax.invert_yaxis()
    if title:
        ax.set_title(title)
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)
