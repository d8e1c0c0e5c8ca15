"""Naive list-based reference model of the event-table buffer.

Kept deliberately dumb: plain lists, slicing, and re-derived capture
arithmetic, so it shares no code with the real implementation.  Tests and
the acceptance suite replay identical traces through both and compare
table contents exactly.
"""

from __future__ import annotations


class ModelTable:
    def __init__(self, kappa):
        self.kappa = kappa
        self.entries = []  # full insert history; live window is the tail

    def add(self, item):
        self.entries.append(item)

    def live(self):
        return self.entries[-self.kappa:] if self.entries else []


class ModelBuffer:
    """List-model twin of ReplayBuffer's storage behavior.

    ``taus`` has one entry per event table.  ``fire(i, t, history)`` is a
    caller-supplied predicate oracle; here the capture rule is re-derived
    from scratch: on a firing at episode position p, append every episode
    position in [max(0, p - tau + 1), p] that this table has not taken yet,
    in order.
    """

    def __init__(self, kappas, taus, fire):
        assert len(kappas) == len(taus) + 1
        self.tables = [ModelTable(k) for k in kappas]
        self.taus = taus
        self.fire = fire
        self.episode = []
        self.taken = [set() for _ in taus]

    def insert(self, t):
        self.episode.append(t)
        self.tables[0].add(t)
        p = len(self.episode) - 1
        for i, tau in enumerate(self.taus):
            if self.fire(i, t, list(self.episode)):
                for j in range(max(0, p - tau + 1), p + 1):
                    if j not in self.taken[i]:
                        self.taken[i].add(j)
                        self.tables[i + 1].add(self.episode[j])

    def end_episode(self):
        self.episode = []
        self.taken = [set() for _ in self.taus]

    def live(self, table_id):
        return self.tables[table_id].live()
