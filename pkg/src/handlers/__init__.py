"""Command-line handlers"""
