"""One module per pipeline concern"""
