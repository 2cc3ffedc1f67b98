"""toolseek: a terminology-driven search engine and registry for computational tools.

The package is organized around one concern per module:

- ``terminology``: concepts, synonym lexicon, three-level category tree
- ``registry``: the system of record for tool cards (ingest, edits, versions)
- ``indexer``: immutable inverted-index snapshots over the registry
- ``query``: the three query grammars and plan compilation
- ``ranking``: the four ranking signals and their weighted combination
- ``search``: plan execution, facet counting, related tools
- ``linkcheck``: homepage probing and obsolescence classification
- ``identifiers``: accession assignment and DOI minting
- ``community``: users, reviews, bookmarks, contributor badges
- ``service``: the REST API
- ``cli``: the administrative command line
"""

__version__ = "0.1.0"
