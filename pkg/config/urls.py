from django.contrib import admin
from django.urls import path

urlpatterns = [
    # Solo el admin: consulta de manifiestos de corridas
    path("admin/", admin.site.urls),
]
