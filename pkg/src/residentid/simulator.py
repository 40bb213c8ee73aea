"""Synthetic multi-resident environment for desk-scale experiments.

Scripted residents walk over an accessibility graph (cyclic routes or
daily schedules) at uniform speed, dwell at POIs, and trigger the
sensor at each POI they reach. Sensors reproduce the off-the-shelf
detection-interval behavior: a report opens a suppression window of
detection_interval seconds during which further motion is swallowed; a
sensor with someone still present re-reports when the window ends, and
reports OFF once no motion has occurred for a full interval. With a
zero interval every arrival reports and nothing else does.

The emitted log uses the same whitespace format the ingest module
consumes, with R<k>_Sim begin/end spans wrapped around each run of
consecutive events caused by the same resident, so span labeling
recovers the ground truth exactly. The true cause of every event is
returned alongside (and exported as a sidecar CSV).
"""

from __future__ import annotations

import csv
import heapq
import math
from dataclasses import dataclass, field, replace
from datetime import datetime, timedelta
from pathlib import Path

import numpy as np

from .errors import DataError
from .geometry import AccessibilityGraph, LayoutMap, Point, Segment
from .ingest import Annotation, EventRecord, format_record

SIM_ACTIVITY_SUFFIX = "Sim"


@dataclass(frozen=True)
class ScheduleEntry:
    """At start_sod seconds into each day, head to (or stay at) poi."""

    start_sod: int
    poi: str


@dataclass(frozen=True)
class ResidentScript:
    """Movement program for one resident.

    Exactly one of route (cyclic POI list, consecutive stops must be
    graph-adjacent) or schedule (daily time-of-day targets; travel uses
    shortest paths) must be given. dwell_mean/dwell_std drive the pause
    at each route stop and at pass-through hops. home_poi marks the
    resident's own station for down-sampling setups.
    """

    resident_id: str
    route: tuple[str, ...] | None = None
    schedule: tuple[ScheduleEntry, ...] | None = None
    dwell_mean: float = 60.0
    dwell_std: float = 15.0
    rng_seed: int = 0
    home_poi: str | None = None

    def __post_init__(self) -> None:
        if (self.route is None) == (self.schedule is None):
            raise DataError(
                f"script {self.resident_id!r} needs exactly one of route or schedule"
            )
        if self.route is not None:
            if len(self.route) < 1:
                raise DataError("route must name at least one POI")
            for a, b in zip(self.route, self.route[1:] + self.route[:1]):
                if len(self.route) > 1 and a == b:
                    raise DataError(f"route repeats {a!r} consecutively")
        if self.schedule is not None and len(self.schedule) < 1:
            raise DataError("schedule must contain at least one entry")
        if self.dwell_mean < 0 or self.dwell_std < 0:
            raise DataError("dwell parameters must be nonnegative")


@dataclass(frozen=True)
class SensorModel:
    detection_interval: float = 0.0
    p_fail: float = 0.0

    def __post_init__(self) -> None:
        if self.detection_interval < 0:
            raise DataError("detection_interval must be >= 0")
        if not 0.0 <= self.p_fail < 1.0:
            raise DataError("p_fail must be in [0, 1)")


@dataclass(frozen=True)
class SimRun:
    duration: float
    scripts: tuple[ResidentScript, ...]
    sensor: SensorModel = SensorModel()
    master_seed: int = 0
    start_time: datetime = datetime(2009, 8, 24, 0, 0, 0)
    speed: float = 1.0

    def __post_init__(self) -> None:
        if self.duration <= 0:
            raise DataError("duration must be positive")
        if not self.scripts:
            raise DataError("a run needs at least one resident script")
        if self.speed <= 0:
            raise DataError("speed must be positive")


@dataclass
class SimLog:
    """Emitted annotated events plus the true cause of each one."""

    records: list[EventRecord]
    residents: list[str]  # ground-truth resident per record


@dataclass
class _Visit:
    arrive: float
    poi: str
    depart: float


def _shortest_path(graph: AccessibilityGraph, src: str, dst: str) -> list[str]:
    """Dijkstra over the distance matrix; raises if dst is unreachable."""
    if src == dst:
        return [src]
    n = graph.n
    s, d = graph.index(src), graph.index(dst)
    dist = np.full(n, np.inf)
    prev = np.full(n, -1, dtype=np.int64)
    dist[s] = 0.0
    heap = [(0.0, s)]
    while heap:
        cur_d, i = heapq.heappop(heap)
        if cur_d > dist[i]:
            continue
        if i == d:
            break
        for j in np.nonzero(graph.dist[i] > 0)[0]:
            nd = cur_d + graph.dist[i, j]
            if nd < dist[j]:
                dist[j] = nd
                prev[j] = i
                heapq.heappush(heap, (nd, int(j)))
    if not np.isfinite(dist[d]):
        raise DataError(f"no path from {src!r} to {dst!r} in the graph")
    path = [d]
    while path[-1] != s:
        path.append(int(prev[path[-1]]))
    return [graph.node_ids[i] for i in reversed(path)]


def _route_visits(graph: AccessibilityGraph, script: ResidentScript, run: SimRun) -> list[_Visit]:
    rng = np.random.default_rng([run.master_seed, script.rng_seed])
    route = script.route
    assert route is not None
    for pid in route:
        graph.index(pid)  # unknown POIs fail fast
    visits: list[_Visit] = []
    t = 0.0
    k = 0
    poi = route[0]
    while t < run.duration:
        dwell = max(0.0, rng.normal(script.dwell_mean, script.dwell_std))
        depart = t + dwell
        visits.append(_Visit(arrive=t, poi=poi, depart=min(depart, run.duration)))
        if depart >= run.duration or len(route) == 1:
            break
        nxt = route[(k + 1) % len(route)]
        if not graph.has_edge(poi, nxt):
            raise DataError(
                f"route of {script.resident_id!r} steps {poi!r} -> {nxt!r} "
                "without a graph edge"
            )
        t = depart + graph.dist[graph.index(poi), graph.index(nxt)] / run.speed
        poi = nxt
        k += 1
    return visits


def _schedule_visits(graph: AccessibilityGraph, script: ResidentScript, run: SimRun) -> list[_Visit]:
    rng = np.random.default_rng([run.master_seed, script.rng_seed])
    entries = sorted(script.schedule, key=lambda e: e.start_sod)
    for e in entries:
        graph.index(e.poi)
        if not 0 <= e.start_sod < 86400:
            raise DataError(f"schedule second-of-day {e.start_sod} out of range")
    visits: list[_Visit] = []
    poi = entries[0].poi
    arrive = 0.0
    day = 0
    while True:
        done = False
        for e in entries:
            target_t = day * 86400.0 + e.start_sod
            if target_t >= run.duration:
                done = True
                break
            if target_t <= arrive or e.poi == poi:
                continue
            hops = _shortest_path(graph, poi, e.poi)
            t = target_t
            visits.append(_Visit(arrive=arrive, poi=poi, depart=min(t, run.duration)))
            if t >= run.duration:
                return visits
            for a, b in zip(hops[:-1], hops[1:]):
                t += graph.dist[graph.index(a), graph.index(b)] / run.speed
                if b != e.poi:
                    pause = max(0.0, rng.normal(script.dwell_mean, script.dwell_std))
                    visits.append(_Visit(arrive=t, poi=b, depart=min(t + pause, run.duration)))
                    t += pause
                if t >= run.duration:
                    return visits
            poi = e.poi
            arrive = t
        if done:
            break
        day += 1
    visits.append(_Visit(arrive=arrive, poi=poi, depart=run.duration))
    return visits


class _SensorState:
    __slots__ = (
        "window_until", "next_check", "present", "last_motion",
        "last_mover", "last_report_on",
    )

    def __init__(self):
        self.window_until = -math.inf
        self.next_check = None
        self.present: dict[str, float] = {}
        self.last_motion = -math.inf
        self.last_mover: str | None = None
        self.last_report_on = False


def simulate(graph: AccessibilityGraph, run: SimRun) -> SimLog:
    """Run the scripted residents and emit the annotated sensor log.

    Deterministic given the run's seeds. Every emitted event carries
    the resident whose motion caused it; when one report covers several
    residents inside a suppression window, the earliest mover wins and
    the others are lost, matching the hardware behavior.
    """
    stimuli: list[tuple[float, int, int, str, str]] = []  # (t, seq, kind, poi, resident)
    seq = 0
    ARRIVE, DEPART, CHECK = 0, 1, 2
    for script in run.scripts:
        if script.route is not None:
            visits = _route_visits(graph, script, run)
        else:
            visits = _schedule_visits(graph, script, run)
        for v in visits:
            stimuli.append((v.arrive, seq, ARRIVE, v.poi, script.resident_id))
            seq += 1
            stimuli.append((v.depart, seq, DEPART, v.poi, script.resident_id))
            seq += 1
    heapq.heapify(stimuli)

    interval = run.sensor.detection_interval
    states: dict[str, _SensorState] = {nid: _SensorState() for nid in graph.node_ids}
    fail_rngs = {
        nid: np.random.default_rng([run.master_seed, 7919, i])
        for i, nid in enumerate(graph.node_ids)
    }
    emitted: list[tuple[float, str, str, str]] = []  # (t, poi, status, cause)

    def attempt_on(t: float, poi: str, cause: str) -> None:
        st = states[poi]
        if t < st.window_until:
            return
        if run.sensor.p_fail > 0 and fail_rngs[poi].random() < run.sensor.p_fail:
            if interval > 0 and st.present:
                schedule_check(poi, t + interval)
            return
        emitted.append((t, poi, "ON", cause))
        st.last_report_on = True
        if interval > 0:
            st.window_until = t + interval
            schedule_check(poi, t + interval)

    def schedule_check(poi: str, t: float) -> None:
        nonlocal seq
        st = states[poi]
        if st.next_check == t:
            return
        st.next_check = t  # any previously queued check becomes stale
        heapq.heappush(stimuli, (t, seq, CHECK, poi, ""))
        seq += 1

    while stimuli:
        t, _, kind, poi, resident = heapq.heappop(stimuli)
        if t > run.duration:
            break
        st = states[poi]
        if kind == ARRIVE:
            st.present[resident] = t
            st.last_motion = t
            st.last_mover = resident
            attempt_on(t, poi, resident)
        elif kind == DEPART:
            st.present.pop(resident, None)
            st.last_motion = t
            st.last_mover = resident
        else:  # CHECK
            if st.next_check != t:
                continue  # superseded by a later reschedule
            st.next_check = None
            if st.present:
                cause = min(st.present.items(), key=lambda kv: kv[1])[0]
                attempt_on(t, poi, cause)
            elif st.last_report_on:
                if t >= st.last_motion + interval:
                    emitted.append((t, poi, "OFF", st.last_mover or ""))
                    st.last_report_on = False
                else:
                    schedule_check(poi, st.last_motion + interval)

    # Wrap each run of consecutive same-resident events in a begin/end
    # span. Every burst re-begins its resident's activity, which keeps
    # it the most recently opened span; single-event bursts stay open
    # (harmless) because one line cannot carry both markers.
    records: list[EventRecord] = []
    causes: list[str] = []
    for i, (t, poi, status, cause) in enumerate(emitted):
        prev_cause = emitted[i - 1][3] if i > 0 else None
        next_cause = emitted[i + 1][3] if i + 1 < len(emitted) else None
        annotation = None
        activity = f"{cause}_{SIM_ACTIVITY_SUFFIX}"
        if cause != prev_cause:
            annotation = Annotation(activity=activity, marker="begin")
        elif cause != next_cause:
            annotation = Annotation(activity=activity, marker="end")
        ts = run.start_time + timedelta(seconds=int(t))
        records.append(EventRecord(ts, poi, status, annotation))
        causes.append(cause)
    return SimLog(records=records, residents=causes)


def write_casas_log(log: SimLog, path: str | Path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        for rec in log.records:
            fh.write(format_record(rec) + "\n")


def write_truth_csv(log: SimLog, path: str | Path) -> None:
    with open(path, "w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["timestamp", "sensor", "resident"])
        for rec, resident in zip(log.records, log.residents):
            writer.writerow([rec.timestamp.isoformat(sep=" "), rec.sensor_id, resident])


def _square4() -> tuple[LayoutMap, SimRun]:
    layout = LayoutMap(
        pois=[
            ("M1", Point((0.0, 0.0))),
            ("M2", Point((10.0, 0.0))),
            ("M3", Point((10.0, 10.0))),
            ("M4", Point((0.0, 10.0))),
        ],
        obstacles=[Segment(Point((4.0, 5.0)), Point((6.0, 5.0)))],
    )
    run = SimRun(
        duration=86400.0,
        scripts=(
            ResidentScript("R1", route=("M1", "M2", "M3", "M4"),
                           dwell_mean=60.0, dwell_std=15.0, rng_seed=1),
            ResidentScript("R2", route=("M3", "M2", "M1", "M4"),
                           dwell_mean=60.0, dwell_std=15.0, rng_seed=2),
        ),
        sensor=SensorModel(detection_interval=0.0, p_fail=0.0),
        master_seed=11,
    )
    return layout, run


def _cycle8() -> tuple[LayoutMap, SimRun]:
    radius = 40.0
    pois = []
    for k in range(8):
        angle = 2.0 * math.pi * k / 8.0
        pois.append((f"S{k}", Point((radius * math.cos(angle), radius * math.sin(angle)))))
    # An inner octagon (rotated half a step) blocks every chord except
    # the eight ring edges.
    inner = 31.0
    corners = []
    for k in range(8):
        angle = 2.0 * math.pi * (k + 0.5) / 8.0
        corners.append(Point((inner * math.cos(angle), inner * math.sin(angle))))
    obstacles = [Segment(corners[k], corners[(k + 1) % 8]) for k in range(8)]
    layout = LayoutMap(pois=pois, obstacles=obstacles)
    clockwise = tuple(f"S{k}" for k in range(8))
    anticlockwise = tuple(f"S{(4 - k) % 8}" for k in range(8))
    run = SimRun(
        duration=10 * 86400.0,
        scripts=(
            ResidentScript("R1", route=clockwise,
                           dwell_mean=300.0, dwell_std=90.0, rng_seed=1),
            ResidentScript("R2", route=anticlockwise,
                           dwell_mean=300.0, dwell_std=90.0, rng_seed=2),
        ),
        sensor=SensorModel(detection_interval=0.0, p_fail=0.1),
        master_seed=23,
    )
    return layout, run


def _office9() -> tuple[LayoutMap, SimRun]:
    layout = LayoutMap(
        pois=[
            ("C1", Point((0.0, 8.0))),
            ("C2", Point((10.0, 8.0))),
            ("C3", Point((20.0, 8.0))),
            ("K1", Point((30.0, 8.0))),
            ("H1", Point((0.0, 0.0))),
            ("H2", Point((10.0, 0.0))),
            ("H3", Point((20.0, 0.0))),
            ("H4", Point((30.0, 0.0))),
            ("E1", Point((38.0, 0.0))),
        ],
        obstacles=[
            Segment(Point((5.0, 3.0)), Point((5.0, 12.0))),
            Segment(Point((15.0, 3.0)), Point((15.0, 12.0))),
            Segment(Point((25.0, 3.0)), Point((25.0, 12.0))),
        ],
    )

    def day(home: str, outings: list[tuple[int, str]]) -> tuple[ScheduleEntry, ...]:
        entries = [ScheduleEntry(0, home)]
        for sod, poi in outings:
            entries.append(ScheduleEntry(sod, poi))
        return tuple(entries)

    scripts = (
        ResidentScript(
            "R1", schedule=day("C1", [(10800, "E1"), (10980, "C1"),
                                      (32400, "K1"), (32580, "C1"),
                                      (54000, "E1"), (54180, "C1")]),
            dwell_mean=3.0, dwell_std=1.0, rng_seed=1, home_poi="C1",
        ),
        ResidentScript(
            "R2", schedule=day("C2", [(14400, "K1"), (14580, "C2"),
                                      (36000, "E1"), (36180, "C2"),
                                      (61200, "K1"), (61380, "C2")]),
            dwell_mean=3.0, dwell_std=1.0, rng_seed=2, home_poi="C2",
        ),
        ResidentScript(
            "R3", schedule=day("C3", [(18000, "E1"), (18180, "C3"),
                                      (43200, "K1"), (43380, "C3"),
                                      (64800, "E1"), (64980, "C3")]),
            dwell_mean=3.0, dwell_std=1.0, rng_seed=3, home_poi="C3",
        ),
    )
    run = SimRun(
        duration=86400.0,
        scripts=scripts,
        sensor=SensorModel(detection_interval=30.0, p_fail=0.0),
        master_seed=37,
    )
    return layout, run


_FIXTURES = {
    "square4": _square4,
    "cycle8": _cycle8,
    "office9": _office9,
}


def make_fixture(name: str) -> tuple[LayoutMap, SimRun]:
    """Built-in reproducible fixtures: square4, cycle8 or office9."""
    try:
        builder = _FIXTURES[name]
    except KeyError:
        raise DataError(
            f"unknown fixture {name!r}; available: {sorted(_FIXTURES)}"
        ) from None
    return builder()
