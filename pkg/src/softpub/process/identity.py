"""When are two agents the same person?"""

from __future__ import annotations

import re
import unicodedata
from typing import Sequence

from ..model import Agent


def fold(text: str) -> str:
    decomposed = unicodedata.normalize("NFKD", text)
    stripped = "".join(c for c in decomposed if not unicodedata.combining(c))
    return re.sub(r"\s+", " ", stripped.casefold()).strip()


def normalized_name(agent: Agent) -> str:
    if agent.given_names or agent.family_names:
        return fold(" ".join(p for p in (agent.given_names, agent.family_names) if p))
    name = agent.full_name or ""
    if name.count(",") == 1:
        family, given = (p.strip() for p in name.split(","))
        name = f"{given} {family}"
    return fold(name)


def agent_identity(a: Agent, b: Agent) -> bool:
    """ORCID decides when both have one; then e-mail; then normalized name."""
    if a.orcid and b.orcid:
        return a.orcid == b.orcid
    if a.email and b.email and a.email.casefold() == b.email.casefold():
        return True
    name_a, name_b = normalized_name(a), normalized_name(b)
    return bool(name_a) and name_a == name_b


def group_agents(agents: Sequence[Agent]) -> list[int]:
    """Union-find over pairwise identity; returns a group id per agent."""
    parent = list(range(len(agents)))

    def find(i):
        while parent[i] != i:
            parent[i] = parent[parent[i]]
            i = parent[i]
        return i

    for i in range(len(agents)):
        for j in range(i + 1, len(agents)):
            if agent_identity(agents[i], agents[j]):
                ri, rj = find(i), find(j)
                if ri != rj:
                    parent[max(ri, rj)] = min(ri, rj)
    return [find(i) for i in range(len(agents))]


def dedupe_agents(agents: Sequence[Agent]) -> list[Agent]:
    """Keep the first agent of every identity group, preserving order."""
    seen = set()
    out = []
    for agent, group in zip(agents, group_agents(agents)):
        if group not in seen:
            seen.add(group)
            out.append(agent)
    return out


def same_agent_lists(a: Sequence[Agent], b: Sequence[Agent]) -> bool:
    return len(a) == len(b) and all(agent_identity(x, y) for x, y in zip(a, b))
