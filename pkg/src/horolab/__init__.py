"""Numerical laboratory for horosphere equidistribution on arithmetic quotients of upper half-space."""
