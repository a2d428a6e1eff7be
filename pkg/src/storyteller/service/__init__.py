"""Human-evaluation rating service.

Serves stories to raters over HTTP, collects six-aspect Likert ratings
into an append-only log, and aggregates them into the two-row comparison
report (model versus human stories). Raters never see which source a
story came from.
"""
