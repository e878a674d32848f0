import json

from django.contrib import admin
from django.utils.html import format_html

from .models import RunManifest


@admin.register(RunManifest)
class RunManifestAdmin(admin.ModelAdmin):
    list_display = [
        'command',
        'master_seed',
        'get_estado_badge',
        'version',
        'created_at',
    ]
    list_filter = [
        'command',
        'exit_code',
        'created_at',
    ]
    search_fields = [
        'command',
        'output_dir',
        'diagnostic',
    ]
    readonly_fields = [
        'command',
        'master_seed',
        'output_dir',
        'version',
        'exit_code',
        'diagnostic',
        'created_at',
        'get_parametros',
        'get_artefactos',
    ]
    exclude = ['parameters', 'artifacts']
    date_hierarchy = 'created_at'
    ordering = ['-created_at']

    fieldsets = (
        ('Ejecución', {
            'fields': ('command', 'master_seed', 'version', 'created_at')
        }),
        ('Resultado', {
            'fields': ('exit_code', 'diagnostic', 'output_dir', 'get_artefactos')
        }),
        ('Configuración resuelta', {
            'fields': ('get_parametros',),
            'classes': ('collapse',)
        }),
    )

    def has_add_permission(self, request):
        return False

    def get_estado_badge(self, obj):
        color_map = {0: 'green', 1: 'red', 2: 'orange'}
        etiqueta = {0: 'Éxito', 1: 'Error', 2: 'Uso inválido'}
        return format_html(
            '<span style="background-color: {}; color: white; padding: 5px 10px; border-radius: 5px; font-weight: bold; font-size: 11px;">{}</span>',
            color_map.get(obj.exit_code, 'gray'),
            etiqueta.get(obj.exit_code, obj.exit_code),
        )
    get_estado_badge.short_description = 'Estado'

    def get_parametros(self, obj):
        return format_html('<pre>{}</pre>', json.dumps(obj.parameters, indent=2, sort_keys=True))
    get_parametros.short_description = 'Parámetros'

    def get_artefactos(self, obj):
        return format_html('<pre>{}</pre>', "\n".join(obj.artifacts))
    get_artefactos.short_description = 'Artefactos'
