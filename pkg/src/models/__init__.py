"""Immutable data model and the exception hierarchy"""
