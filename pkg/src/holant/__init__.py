"""Boolean holant toolkit: exact evaluation, tractability classification, gadget synthesis."""

__version__ = "0.1.0"
